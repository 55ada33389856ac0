//! Closed-form bounds and the audit that checks a built network against them.
//!
//! Asymptotic formulas use constant 1 and base-2 logs clamped to at least 1;
//! they only produce reported ratios. Pass/fail is reserved for exact claims:
//! memorization, pass-through contracts, width, and structural depth.

use std::collections::BTreeMap;

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exactnum::{ceil_log2, format_rational, parse_rational};
use crate::netir::{LayeredNet, NetMetrics};
use crate::par;
use crate::pipeline::{eval_point, eval_point_trace, Dataset};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Hidden units allowed beyond the core width of 12: the forwarded input and
/// the running sum in the chained construction.
pub const WIDTH_SLACK: usize = 2;

/// Core width of the block-lookup stage.
pub const CORE_WIDTH: usize = 12;

pub const THEOREMS: [&str; 4] = ["sqrt_memorizer", "bounded_depth", "bounded_bits", "regression"];

/// Counting bound on shattered points: `W·B + W·⌈log2 W⌉`.
pub fn vc_upper_bits(w: u64, b: u64) -> u64 {
    let w = w.max(1);
    w * b.max(1) + w * ceil_log2(w)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LowerBound {
    /// `⌈√N⌉`
    Sqrt,
    /// `⌈√(N·log2 N)⌉`
    LogLinear,
    /// `⌈N / (L·log2 N)⌉`
    DepthLimited(u64),
}

fn ceil_sqrt(v: u64) -> u64 {
    let mut r = (v as f64).sqrt() as u64;
    while r * r < v {
        r += 1;
    }
    while r > 0 && (r - 1) * (r - 1) >= v {
        r -= 1;
    }
    r
}

pub fn lower_bound_params(n: u64, mode: LowerBound) -> u64 {
    let lg = (n.max(2) as f64).log2();
    match mode {
        LowerBound::Sqrt => ceil_sqrt(n),
        LowerBound::LogLinear => {
            // exact when N is a power of two, which keeps N·log2 N an integer
            let prod = n as f64 * lg;
            if prod.fract() == 0.0 {
                ceil_sqrt(prod as u64)
            } else {
                prod.sqrt().ceil() as u64
            }
        }
        LowerBound::DepthLimited(l) => (n as f64 / (l.max(1) as f64 * lg)).ceil() as u64,
    }
}

fn lg(v: f64) -> f64 {
    v.log2().max(1.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub n: usize,
    pub d: usize,
    pub classes: Option<u64>,
    pub r_sq: String,
    pub delta_sq: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema_version: u32,
    pub theorem: String,
    pub realized: NetMetrics,
    pub dataset: DatasetSummary,
    /// Build metadata recorded on the network.
    pub build: BTreeMap<String, String>,
    /// Formula values with constant 1.
    pub ceilings: BTreeMap<String, f64>,
    /// Realized metric over its ceiling.
    pub ratios: BTreeMap<String, f64>,
    pub lower_bounds: BTreeMap<String, u64>,
    /// Exact claims; every entry must hold for `pass`.
    pub checks: BTreeMap<String, bool>,
    /// `N / vc_upper_bits(params, bits)`.
    pub kappa: f64,
    pub width_slack: usize,
    pub memorized: bool,
    /// Largest `|F(x_i) − y_i|`, exact.
    pub max_error: String,
    pub pass: bool,
}

impl AuditReport {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let r: AuditReport = serde_json::from_str(s)?;
        if r.schema_version != REPORT_SCHEMA_VERSION {
            return Err(Error::Schema(format!("unsupported report schema version {}", r.schema_version)));
        }
        Ok(r)
    }
}

fn annotation<T: std::str::FromStr>(net: &LayeredNet, key: &str) -> Result<T> {
    net.annotations()
        .get(key)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Provenance(format!("network lacks build annotation {key:?}")))
}

fn annotation_rational(net: &LayeredNet, key: &str) -> Result<BigRational> {
    let s: String = annotation(net, key)?;
    parse_rational(&s)
}

struct PointResult {
    error: BigRational,
    exact: bool,
    contract_ok: bool,
    /// Extra structural checks computed from the layer trace.
    trace_ok: bool,
}

/// Error, tolerance and structure verdicts for one training point.
fn point_result(net: &LayeredNet, theorem: &str, x: &[BigRational], y: &BigRational, tol: &BigRational) -> PointResult {
    let fail = |contract_ok| PointResult {
        error: BigRational::zero(),
        exact: false,
        contract_ok,
        trace_ok: false,
    };
    let (out, trace_ok) = match theorem {
        "bounded_depth" | "bounded_bits" => match eval_point_trace(net, x) {
            Ok(trace) => {
                let ok = if theorem == "bounded_depth" {
                    single_active_term(&trace)
                } else {
                    single_accumulator_update(net, &trace, y)
                };
                (trace.last().expect("nonempty")[0].clone(), ok)
            }
            Err(Error::ContractViolation { .. }) => return fail(false),
            Err(_) => return fail(true),
        },
        _ => match eval_point(net, x) {
            Ok(v) => (v[0].clone(), true),
            Err(Error::ContractViolation { .. }) => return fail(false),
            Err(_) => return fail(true),
        },
    };
    let error = (&out - y).abs();
    let exact = error <= *tol;
    PointResult {
        error,
        exact,
        contract_ok: true,
        trace_ok,
    }
}

/// The summed head's inputs: exactly one subnetwork answers.
fn single_active_term(trace: &[Vec<BigRational>]) -> bool {
    let terms = &trace[trace.len() - 2];
    terms.iter().filter(|v| !v.is_zero()).count() == 1
}

/// In the chain, the running label is 0 up to the owning block and `y` after it.
fn single_accumulator_update(net: &LayeredNet, trace: &[Vec<BigRational>], y: &BigRational) -> bool {
    let Ok(ends) = annotation::<String>(net, "block_ends") else {
        return false;
    };
    let mut seen = false;
    for idx in ends.split(',').filter_map(|s| s.parse::<usize>().ok()) {
        let Some(v) = trace.get(idx).and_then(|l| l.get(1)) else {
            return false;
        };
        if v.is_zero() {
            if seen {
                return false;
            }
        } else if v == y {
            seen = true;
        } else {
            return false;
        }
    }
    seen
}

/// Audits `net` on `ds` against the formulas of `theorem` (default: the net's provenance).
pub fn audit(net: &LayeredNet, ds: &Dataset, theorem: Option<&str>) -> Result<AuditReport> {
    let theorem = theorem.unwrap_or(net.provenance()).to_string();
    if !THEOREMS.contains(&theorem.as_str()) {
        return Err(Error::Provenance(theorem));
    }
    let m = net.metrics();
    let n = ds.len() as u64;
    let nf = n as f64;
    let r_real = annotation_rational(net, "r_realized")?;
    let lg_r = lg(r_real.to_f64().unwrap_or(f64::MAX));

    let tol = if theorem == "regression" {
        annotation_rational(net, "epsilon")? / BigRational::from_integer(2.into())
    } else {
        BigRational::zero()
    };
    if theorem != "regression" && ds.classes().is_none() {
        return Err(Error::Parameter("classification audit needs integer labels".into()));
    }
    let results = par::map_range(ds.len(), |i| point_result(net, &theorem, &ds.points()[i], &ds.labels()[i], &tol));
    let memorized = results.iter().all(|r| r.exact && r.contract_ok);
    let max_error = results.iter().map(|r| r.error.clone()).max().unwrap_or_else(BigRational::zero);

    let mut ceilings: BTreeMap<String, f64> = BTreeMap::new();
    let mut checks = BTreeMap::new();
    checks.insert("memorized".to_string(), memorized);
    checks.insert("pass_through_contracts".to_string(), results.iter().all(|r| r.contract_ok));

    let lg_n = lg(nf);
    match theorem.as_str() {
        "sqrt_memorizer" | "regression" => {
            let classes: u64 = annotation(net, "classes")?;
            let lg_rc = lg_r.max(lg(classes as f64));
            let depth_f = (nf * lg_n).sqrt() + (nf / lg_n).sqrt() * lg_rc;
            ceilings.insert("depth".into(), depth_f);
            ceilings.insert("params".into(), depth_f);
            ceilings.insert("bits".into(), lg(ds.dim() as f64) + (nf / lg_n).sqrt() * lg_rc);
            let mb: usize = annotation(net, "bucket_count")?;
            let k: usize = annotation(net, "bucket_size")?;
            let rho: usize = annotation(net, "rho")?;
            let c: usize = annotation(net, "c")?;
            // projection 2, bucket select 2m+1, block lookup k·(3·max(ρ,c)+3)+1
            let expect = 2 + (2 * mb + 1) + (k * (3 * rho.max(c) + 3) + 1);
            checks.insert("depth_structure".into(), m.depth == expect);
            checks.insert("width".into(), m.width <= CORE_WIDTH + WIDTH_SLACK);
            ceilings.insert("width".into(), (CORE_WIDTH + WIDTH_SLACK) as f64);
        }
        "bounded_depth" => {
            let l: u64 = annotation(net, "L")?;
            let subsets: u64 = annotation(net, "subsets")?;
            let lg_l = lg(l as f64);
            ceilings.insert("width".into(), subsets as f64);
            ceilings.insert("depth".into(), l as f64 / lg_l.sqrt() * lg_r);
            ceilings.insert("params".into(), nf / (l as f64 * lg_l.sqrt()) * lg_r + ds.dim() as f64);
            checks.insert("width".into(), m.width as u64 <= CORE_WIDTH as u64 * subsets);
        }
        "bounded_bits" => {
            let b: u64 = annotation(net, "B")?;
            let lg_b = lg(b as f64);
            ceilings.insert("bits".into(), b as f64 / lg_b.sqrt() * lg_r);
            ceilings.insert("depth".into(), nf * lg_b.sqrt() / b as f64 * lg_r);
            ceilings.insert("width".into(), (CORE_WIDTH + WIDTH_SLACK) as f64);
            checks.insert("width".into(), m.width <= CORE_WIDTH + WIDTH_SLACK);
        }
        _ => unreachable!(),
    }
    if matches!(theorem.as_str(), "bounded_depth" | "bounded_bits") {
        checks.insert("structure".into(), results.iter().all(|r| r.trace_ok));
    }

    let realized = |k: &str| -> f64 {
        match k {
            "width" => m.width as f64,
            "depth" => m.depth as f64,
            "params" => m.params as f64,
            "bits" => m.bits as f64,
            _ => f64::NAN,
        }
    };
    let mut ratios: BTreeMap<String, f64> = ceilings.iter().map(|(k, v)| (k.clone(), realized(k) / v)).collect();

    let mut lower_bounds = BTreeMap::new();
    lower_bounds.insert("sqrt_n".to_string(), lower_bound_params(n, LowerBound::Sqrt));
    lower_bounds.insert("sqrt_n_log_n".to_string(), lower_bound_params(n, LowerBound::LogLinear));
    lower_bounds.insert(
        "n_over_depth_log_n".to_string(),
        lower_bound_params(n, LowerBound::DepthLimited(m.depth as u64)),
    );
    for (k, v) in &lower_bounds {
        ratios.insert(format!("params_over_{k}"), m.params as f64 / (*v).max(1) as f64);
    }
    let kappa = nf / vc_upper_bits(m.params as u64, m.bits) as f64;
    let pass = checks.values().all(|&b| b);
    Ok(AuditReport {
        schema_version: REPORT_SCHEMA_VERSION,
        theorem,
        realized: m,
        dataset: DatasetSummary {
            n: ds.len(),
            d: ds.dim(),
            classes: ds.classes(),
            r_sq: format_rational(ds.r_sq()),
            delta_sq: ds.delta_sq().map(format_rational),
        },
        build: net.annotations().clone(),
        ceilings,
        ratios,
        lower_bounds,
        checks,
        kappa,
        width_slack: WIDTH_SLACK,
        memorized,
        max_error: format_rational(&max_error),
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vc_examples() {
        assert_eq!(vc_upper_bits(1, 1), 1);
        assert_eq!(vc_upper_bits(16, 4), 128);
    }

    #[test]
    fn lower_bound_examples() {
        assert_eq!(lower_bound_params(4, LowerBound::Sqrt), 2);
        assert_eq!(lower_bound_params(256, LowerBound::LogLinear), 46);
        assert_eq!(lower_bound_params(256, LowerBound::DepthLimited(4)), 8);
    }

    #[test]
    fn vc_is_monotone() {
        for w in 1..64 {
            for b in 1..16 {
                assert!(vc_upper_bits(w + 1, b) >= vc_upper_bits(w, b));
                assert!(vc_upper_bits(w, b + 1) >= vc_upper_bits(w, b));
            }
        }
    }

    #[test]
    fn unknown_theorem_is_a_provenance_error() {
        let ds = Dataset::from_classes(vec![vec![BigRational::zero()]], &[1], 1).unwrap();
        let net = LayeredNet::identity(1);
        assert!(matches!(audit(&net, &ds, Some("made_up")), Err(Error::Provenance(_))));
    }
}
