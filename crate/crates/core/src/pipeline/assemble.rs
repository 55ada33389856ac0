use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive};

use super::codes::{craft_codes, default_bucket_count, floor_nat, CraftedCode};
use super::dataset::Dataset;
use super::stage1::{project_to_line, retry_budget_from_env, Projection1D, DEFAULT_CANDIDATES};
use super::stage2::build_stage2;
use super::stage3::build_stage3;
use crate::bounds::{audit, AuditReport};
use crate::error::{Error, Result};
use crate::exactnum::{format_rational, BigNat, Dyadic};
use crate::netir::{compose_affine, compose_serial, AffineLayer, LayeredNet};

#[derive(Clone, Debug)]
pub struct BuildConfig {
    pub seed: u64,
    pub retry_budget: usize,
    pub candidates: usize,
    /// Overrides the default bucket count for the full dataset.
    pub bucket_count: Option<usize>,
}

impl Default for BuildConfig {
    fn default() -> Self {
        BuildConfig {
            seed: 0,
            retry_budget: retry_budget_from_env(),
            candidates: DEFAULT_CANDIDATES,
            bucket_count: None,
        }
    }
}

impl BuildConfig {
    pub fn with_seed(seed: u64) -> Self {
        BuildConfig {
            seed,
            ..Self::default()
        }
    }
}

/// The shared first stage plus the training points sorted by projection.
#[derive(Clone, Debug)]
pub struct Projected {
    pub projection: Projection1D,
    pub net: LayeredNet,
    pub order: Vec<usize>,
    pub z_sorted: Vec<BigRational>,
    pub labels_sorted: Vec<u64>,
    pub max_floor: BigNat,
}

pub fn project_sorted(ds: &Dataset, cfg: &BuildConfig) -> Result<Projected> {
    let labels = ds.class_labels()?;
    let (projection, net) = project_to_line(ds, cfg.seed, cfg.retry_budget, cfg.candidates)?;
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.sort_by(|&a, &b| projection.z[a].cmp(&projection.z[b]));
    let z_sorted: Vec<BigRational> = order.iter().map(|&i| projection.z[i].clone()).collect();
    let labels_sorted = order.iter().map(|&i| labels[i]).collect();
    let max_floor = floor_nat(z_sorted.last().expect("nonempty"))?;
    Ok(Projected {
        projection,
        net,
        order,
        z_sorted,
        labels_sorted,
        max_floor,
    })
}

/// Bucket selector followed by block lookup for one run of sorted points.
#[derive(Clone, Debug)]
pub struct Subnet {
    pub code: CraftedCode,
    pub net: LayeredNet,
}

pub fn build_subnet(
    z: &[BigRational],
    labels: &[u64],
    classes: u64,
    buckets: Option<usize>,
    max_floor: &BigNat,
    forward_x: bool,
) -> Result<Subnet> {
    let m = buckets.unwrap_or_else(|| default_bucket_count(z.len()));
    let code = craft_codes(z, labels, classes, m, max_floor)?;
    code.check_gaps()?;
    let s2 = build_stage2(&code)?;
    let s3 = build_stage3(code.bucket_size, code.rho, code.c, forward_x)?;
    let net = compose_serial(&s2, &s3)?;
    Ok(Subnet { code, net })
}

fn annotate_common(net: &mut LayeredNet, ds: &Dataset, p: &Projected, seed: u64) {
    net.annotate("seed", seed);
    net.annotate("r_realized", format_rational(&p.projection.r_realized));
    net.annotate("truncation_bits", p.projection.truncation_bits);
    net.annotate("n", ds.len());
    net.annotate("d", ds.dim());
}

fn sqrt_core(ds: &Dataset, cfg: &BuildConfig) -> Result<LayeredNet> {
    let classes = ds
        .classes()
        .ok_or_else(|| Error::Parameter("classification needs a class count".into()))?;
    let p = project_sorted(ds, cfg)?;
    let sub = build_subnet(&p.z_sorted, &p.labels_sorted, classes, cfg.bucket_count, &p.max_floor, false)?;
    let mut net = compose_serial(&p.net, &sub.net)?;
    annotate_common(&mut net, ds, &p, cfg.seed);
    net.annotate("classes", classes);
    net.annotate("bucket_count", sub.code.bucket_count);
    net.annotate("bucket_size", sub.code.bucket_size);
    net.annotate("rho", sub.code.rho);
    net.annotate("c", sub.code.c);
    Ok(net)
}

/// Builds the width-12 memorizer and audits it.
pub fn assemble_sqrt(ds: &Dataset, cfg: &BuildConfig) -> Result<(LayeredNet, AuditReport)> {
    let mut net = sqrt_core(ds, cfg)?;
    net.set_provenance("sqrt_memorizer");
    let report = audit(&net, ds, None)?;
    Ok((net, report))
}

/// Label quantization for a real-valued dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionGrid {
    /// Largest power of two not above the requested tolerance.
    pub step: Dyadic,
    /// Grid origin: the smallest label rounded down to a multiple of `step`.
    pub origin: Dyadic,
    pub classes: u64,
    /// Class of every label, in dataset order.
    pub assigned: Vec<u64>,
}

impl RegressionGrid {
    /// Centre of class `q`'s cell.
    pub fn midpoint(&self, q: u64) -> Dyadic {
        &(&self.origin + &(&Dyadic::from_int(q as i64) * &self.step)) - &self.step.mul_pow2(-1)
    }
}

fn pow2_floor_exponent(r: &BigRational) -> i64 {
    // 2^e ≤ r < 2^(e+1)
    let (n, d) = (r.numer(), r.denom());
    let mut e = n.bits() as i64 - d.bits() as i64;
    let two = BigRational::from_integer(2.into());
    let p = |e: i64| {
        if e >= 0 {
            BigRational::from_integer(BigInt::one() << e as u64)
        } else {
            BigRational::new(BigInt::one(), BigInt::one() << (-e) as u64)
        }
    };
    while p(e) > *r {
        e -= 1;
    }
    while p(e) * &two <= *r {
        e += 1;
    }
    e
}

pub fn regression_grid(labels: &[BigRational], epsilon: &BigRational) -> Result<RegressionGrid> {
    if !epsilon.is_positive() {
        return Err(Error::Parameter(format!("epsilon must be positive, got {}", format_rational(epsilon))));
    }
    let e = pow2_floor_exponent(epsilon);
    let step = Dyadic::pow2(e);
    let sr = step.to_rational();
    let lo = labels.iter().min().expect("nonempty");
    let hi = labels.iter().max().expect("nonempty");
    let origin_i = (lo / &sr).floor().to_integer();
    let origin_r = BigRational::from_integer(origin_i.clone()) * &sr;
    let span = ((hi - &origin_r) / &sr).ceil().to_integer();
    let classes = span.to_u64().unwrap_or(u64::MAX).max(1);
    let assigned = labels
        .iter()
        .map(|y| {
            let q: BigInt = ((y - &origin_r) / &sr).floor().to_integer() + 1;
            q.to_u64().expect("label above origin").min(classes)
        })
        .collect();
    Ok(RegressionGrid {
        step,
        origin: Dyadic::new(origin_i, e),
        classes,
        assigned,
    })
}

/// Quantizes real labels to an ε-grid, memorizes the class index and maps it
/// back to the cell midpoint, so every output is within ε/2 of its label.
pub fn regression_wrap(ds: &Dataset, epsilon: &BigRational, cfg: &BuildConfig) -> Result<(LayeredNet, AuditReport)> {
    let grid = regression_grid(ds.labels(), epsilon)?;
    let classes_ds = Dataset::from_classes(ds.points().to_vec(), &grid.assigned, grid.classes)?;
    let core = sqrt_core(&classes_ds, cfg)?;
    let half = grid.step.mul_pow2(-1);
    let head = LayeredNet::new(
        1,
        vec![AffineLayer::new(1, vec![vec![(0, grid.step.clone())]], vec![&grid.origin - &half], false)?],
        "dequantize",
    )?;
    let mut net = compose_affine(&core, &head)?;
    net.set_provenance("regression");
    for (k, v) in core.annotations() {
        net.annotate(k.clone(), v);
    }
    net.annotate("epsilon", format_rational(epsilon));
    net.annotate("grid_step", grid.step.to_string());
    net.annotate("grid_origin", grid.origin.to_string());
    let report = audit(&net, ds, None)?;
    Ok((net, report))
}
