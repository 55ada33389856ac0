//! Exhaustive checks of the gadgets against independent closed forms.
//!
//! Each suite enumerates small parameters and inputs, compares the exact
//! network output with a formula written without reference to the network,
//! and reports counts plus the first mismatch.

use std::sync::Mutex;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::exactnum::{bin_range, BigNat, Dyadic};
use crate::gadgets::{
    bin_bit_value, build_bit_extractor, build_distance_gate, build_indicator, build_triangle, probe_points,
};
use crate::netir::compose_serial;
use crate::par;
use crate::pipeline::build_stage3;

/// Largest accepted `n_max`.
pub const N_MAX_LIMIT: u64 = 14;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Triangle,
    Indicator,
    Distance,
    Bits,
    Stage3,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Triangle, Suite::Indicator, Suite::Distance, Suite::Bits, Suite::Stage3];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Triangle => "triangle",
            Suite::Indicator => "indicator",
            Suite::Distance => "distance",
            Suite::Bits => "bits",
            Suite::Stage3 => "stage3",
        }
    }

    pub fn parse(s: &str) -> Result<Suite> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Parameter(format!("unknown oracle suite {s:?}")))
    }
}

/// Deliberate defects, for proving the harness can fail.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Faults {
    /// Added to the power of two in the single-bit formula.
    pub bit_exponent_skew: i64,
}

#[derive(Clone, Debug, Serialize, PartialEq, Eq)]
pub struct OracleSummary {
    pub suite: String,
    pub n_max: u64,
    pub checks: u64,
    pub mismatches: u64,
    pub witness: Option<String>,
    pub pass: bool,
}

#[derive(Default)]
struct Tally {
    checks: u64,
    mismatches: u64,
    witness: Option<String>,
}

impl Tally {
    fn merge(&mut self, o: Tally) {
        self.checks += o.checks;
        self.mismatches += o.mismatches;
        if self.witness.is_none() {
            self.witness = o.witness;
        }
    }

    fn check(&mut self, ok: bool, witness: impl FnOnce() -> String) {
        self.checks += 1;
        if !ok {
            self.mismatches += 1;
            if self.witness.is_none() {
                self.witness = Some(witness());
            }
        }
    }
}

fn d(m: i64, s: i64) -> Dyadic {
    Dyadic::ratio_pow2(m, s)
}

fn clamp01(v: Dyadic) -> Dyadic {
    if v.is_negative() {
        Dyadic::zero()
    } else if v > Dyadic::one() {
        Dyadic::one()
    } else {
        v
    }
}

/// Tent map `z ↦ 2z` on `[0, 1/2]`, `2 − 2z` on `[1/2, 1]`.
fn tent(z: &Dyadic) -> Dyadic {
    if *z <= d(1, 1) {
        z.mul_pow2(1)
    } else {
        &Dyadic::from_int(2) - &z.mul_pow2(1)
    }
}

fn tent_iter(z: &Dyadic, k: u64) -> Dyadic {
    (0..k).fold(z.clone(), |v, _| tent(&v))
}

fn triangle_suite(n_max: u64) -> Tally {
    let tri = build_triangle();
    let mut net = tri.clone();
    let mut t = Tally::default();
    let grid: Vec<Dyadic> = (0..=(1i64 << n_max)).map(|j| d(j, n_max as i64)).collect();
    for k in 1..=n_max {
        if k > 1 {
            net = compose_serial(&net, &tri).expect("triangle chain");
        }
        let parts = par::map(&grid, |z| {
            let mut t = Tally::default();
            let got = net.eval_checked(std::slice::from_ref(z)).map(|v| v[0].clone());
            let want = tent_iter(z, k);
            t.check(got.as_ref() == Ok(&want), || format!("phi^{k}({z}) = {got:?}, want {want}"));
            t
        });
        parts.into_iter().for_each(|p| t.merge(p));
    }
    t
}

fn indicator_suite(n_max: u64) -> Tally {
    let mut t = Tally::default();
    for b in 1..=n_max as i64 {
        for a in 0..b {
            let net = build_indicator(&BigNat::from(a as u64), &BigNat::from(b as u64)).expect("a < b");
            for q in (4 * (a - 3))..=(4 * (b + 3)) {
                let x = d(q, 2);
                let want = clamp01(
                    (&x.mul_pow2(1) - &Dyadic::from_int(2 * a - 1)).min(&Dyadic::from_int(2 * b + 1) - &x.mul_pow2(1)),
                );
                let got = net.eval_checked(std::slice::from_ref(&x)).map(|v| v[0].clone());
                t.check(got.as_ref() == Ok(&want), || {
                    format!("indicator[{a},{b}]({x}) = {got:?}, want {want}")
                });
            }
        }
    }
    t
}

fn distance_suite(n_max: u64) -> Tally {
    let net = build_distance_gate();
    let mut t = Tally::default();
    let span = 4 * n_max as i64;
    for qy in -span..=span {
        let y = d(qy, 2);
        for off in -12..=16 {
            let x = d(qy + off, 2);
            let diff = d(off, 2).mul_pow2(1);
            let want = clamp01((&diff + &Dyadic::one()).min(&Dyadic::from_int(3) - &diff));
            let got = net.eval_checked(&[x.clone(), y.clone()]).map(|v| v[0].clone());
            t.check(got.as_ref() == Ok(&want), || format!("gate({x}, {y}) = {got:?}, want {want}"));
        }
    }
    t
}

fn bits_suite(n_max: u64, faults: Faults) -> Tally {
    let mut t = Tally::default();
    for n in 1..=n_max {
        let xs: Vec<u64> = (0..(1u64 << n)).collect();
        // single-bit formula
        let parts = par::map(&xs, |&x| {
            let mut t = Tally::default();
            let xn = BigNat::from(x);
            for i in 1..=n {
                let want = Dyadic::from_nat(&bin_range(&xn, i, i, n).expect("in range"));
                let got = bin_bit_value(&xn, n, i, faults.bit_exponent_skew);
                t.check(got.as_ref() == Ok(&want), || format!("bin_{i}({x}) with n={n}: {got:?}, want {want}"));
            }
            t
        });
        parts.into_iter().for_each(|p| t.merge(p));

        // range extractor, every i ≤ j
        for i in 1..=n {
            for j in i..=n {
                let net = build_bit_extractor(n, i, j).expect("valid range");
                let parts = par::map(&xs, |&x| {
                    let mut t = Tally::default();
                    let xn = BigNat::from(x);
                    let (mid, quarter) = probe_points(&xn, n);
                    let input = [tent_iter(&mid, i - 1), tent_iter(&quarter, i - 1)];
                    let want = [
                        tent_iter(&mid, j),
                        tent_iter(&quarter, j),
                        Dyadic::from_nat(&bin_range(&xn, i, j, n).expect("in range")),
                    ];
                    let got = net.eval_checked(&input);
                    t.check(got.as_deref() == Ok(&want[..]), || {
                        format!("extract[{i}..={j}]({x}) with n={n}: {got:?}")
                    });
                    t
                });
                parts.into_iter().for_each(|p| t.merge(p));
            }
        }
    }
    t
}

/// Every block tuple in `[0, 2^rho)` with pairwise gaps of at least 2.
fn spread_tuples(n: usize, rho: u64) -> Vec<Vec<u64>> {
    let top = 1u64 << rho;
    let mut out = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::new();
        for tup in &out {
            for v in 0..top {
                if tup.iter().all(|&u: &u64| u.abs_diff(v) >= 2) {
                    let mut t2 = tup.clone();
                    t2.push(v);
                    next.push(t2);
                }
            }
        }
        out = next;
    }
    out
}

fn pack(blocks: &[u64], width: u64) -> BigNat {
    blocks.iter().fold(BigNat::from(0u8), |acc, &b| (acc << width) | BigNat::from(b))
}

fn stage3_suite(n_max: u64) -> Tally {
    let mut t = Tally::default();
    for n in 1..=2usize {
        for rho in 2..=n_max.min(4) {
            for c in 1..=3u64 {
                if n as u64 * rho.max(c) > n_max.max(2) {
                    continue;
                }
                let net = build_stage3(n, rho, c, false).expect("lookup net");
                let tuples = spread_tuples(n, rho);
                let tally = Mutex::new(Tally::default());
                par::map(&tuples, |us| {
                    let mut local = Tally::default();
                    let ws: Vec<u64> = us.iter().enumerate().map(|(k, u)| (u + 3 * k as u64 + 1) % (1 << c)).collect();
                    let (u, w) = (pack(us, rho), pack(&ws, c));
                    for q in 0..=(4 * ((1i64 << rho) + 2)) {
                        let x = d(q, 2);
                        let hit = us.iter().position(|&b| x >= Dyadic::from_int(b as i64) && x <= Dyadic::from_int(b as i64 + 1));
                        let far = us.iter().all(|&b| {
                            x < &Dyadic::from_int(b as i64) - &d(1, 1) || x > &Dyadic::from_int(b as i64) + &d(3, 1)
                        });
                        let want = match (hit, far) {
                            (Some(k), _) => Dyadic::from_int(ws[k] as i64),
                            (None, true) => Dyadic::zero(),
                            // ramp region, left to the formulas
                            (None, false) => continue,
                        };
                        let got = net
                            .eval_checked(&[x.clone(), Dyadic::from_nat(&w), Dyadic::from_nat(&u)])
                            .map(|v| v[0].clone());
                        local.check(got.as_ref() == Ok(&want), || {
                            format!("lookup(n={n}, rho={rho}, c={c}) x={x} u={us:?} w={ws:?}: {got:?}, want {want}")
                        });
                    }
                    tally.lock().expect("tally lock").merge(local);
                });
                t.merge(tally.into_inner().expect("tally lock"));
            }
        }
    }
    t
}

pub fn run_suite(suite: Suite, n_max: u64, faults: Faults) -> Result<OracleSummary> {
    if n_max == 0 || n_max > N_MAX_LIMIT {
        return Err(Error::Parameter(format!("n_max must be in 1..={N_MAX_LIMIT}")));
    }
    let t = match suite {
        Suite::Triangle => triangle_suite(n_max),
        Suite::Indicator => indicator_suite(n_max),
        Suite::Distance => distance_suite(n_max),
        Suite::Bits => bits_suite(n_max, faults),
        Suite::Stage3 => stage3_suite(n_max),
    };
    Ok(OracleSummary {
        suite: suite.name().to_string(),
        n_max,
        checks: t.checks,
        mismatches: t.mismatches,
        witness: t.witness,
        pass: t.mismatches == 0 && t.checks > 0,
    })
}
