//! Trade-off constructions over a shared projection.
//!
//! Both split the sorted projected points into contiguous subsets and build
//! one bucket-select/lookup subnetwork per subset. A subnetwork outputs 0 on
//! every training point outside its subset, because its bucket intervals
//! cover only its own run of the line.
//!
//! - Bounded depth stacks the subnetworks side by side and sums them.
//! - Bounded bits chains them, each adding its answer to a running label.

use crate::bounds::{audit, AuditReport};
use crate::error::{Error, Result};
use crate::exactnum::Dyadic;
use crate::netir::{compose_affine, compose_serial, extend_identity, stack_parallel, AffineLayer, LayeredNet, Side};
use crate::par;
use crate::pipeline::{build_subnet, project_sorted, BuildConfig, Dataset, Projected, Subnet};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VariantMode {
    BoundedDepth,
    BoundedBits,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VariantConfig {
    pub mode: VariantMode,
    /// `L` for bounded depth, `B` for bounded bits.
    pub param: u64,
}

impl VariantConfig {
    /// Points per subset: `param²`.
    pub fn subset_size(&self) -> usize {
        (self.param * self.param) as usize
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let mut top = (n as f64).sqrt() as u64;
        while (top * top) < n as u64 {
            top += 1;
        }
        if self.param == 0 || self.param > top.max(1) {
            return Err(Error::Parameter(format!("parameter {} not in 1..={}", self.param, top.max(1))));
        }
        Ok(())
    }
}

fn subnets(ds: &Dataset, p: &Projected, size: usize, forward_x: bool) -> Result<Vec<Subnet>> {
    let classes = ds.classes().expect("checked by caller");
    let ranges: Vec<(usize, usize)> = (0..ds.len())
        .step_by(size)
        .map(|lo| (lo, (lo + size).min(ds.len())))
        .collect();
    par::map(&ranges, |&(lo, hi)| {
        build_subnet(&p.z_sorted[lo..hi], &p.labels_sorted[lo..hi], classes, None, &p.max_floor, forward_x)
    })
    .into_iter()
    .collect()
}

fn annotate(net: &mut LayeredNet, ds: &Dataset, p: &Projected, cfg: &BuildConfig, key: &str, param: u64, count: usize) {
    net.annotate("seed", cfg.seed);
    net.annotate("r_realized", crate::exactnum::format_rational(&p.projection.r_realized));
    net.annotate("truncation_bits", p.projection.truncation_bits);
    net.annotate("n", ds.len());
    net.annotate("d", ds.dim());
    net.annotate("classes", ds.classes().unwrap_or(0));
    net.annotate(key, param);
    net.annotate("subsets", count);
}

fn prepare(ds: &Dataset, vc: &VariantConfig, cfg: &BuildConfig) -> Result<Projected> {
    vc.validate(ds.len())?;
    if ds.classes().is_none() {
        return Err(Error::Parameter("variants need integer labels".into()));
    }
    project_sorted(ds, cfg)
}

fn sum_head(inputs: usize) -> Result<LayeredNet> {
    let row = (0..inputs).map(|i| (i, Dyadic::one())).collect();
    LayeredNet::new(inputs, vec![AffineLayer::new(inputs, vec![row], vec![Dyadic::zero()], false)?], "sum")
}

/// Wide, shallower memorizer: `⌈N/L²⌉` stacked subnetworks summed by one head.
pub fn assemble_bounded_depth(ds: &Dataset, l: u64, cfg: &BuildConfig) -> Result<(LayeredNet, AuditReport)> {
    let vc = VariantConfig {
        mode: VariantMode::BoundedDepth,
        param: l,
    };
    let p = prepare(ds, &vc, cfg)?;
    let subs = subnets(ds, &p, vc.subset_size(), false)?;
    let members: Vec<LayeredNet> = subs.into_iter().map(|s| s.net).collect();
    let count = members.len();
    let stacked = stack_parallel(&members)?;
    // the head is joined through a ReLU so the audit can read the stacked outputs
    let body = compose_serial(&stacked, &sum_head(count)?)?;
    let mut net = compose_serial(&p.net, &body)?;
    net.set_provenance("bounded_depth");
    annotate(&mut net, ds, &p, cfg, "L", l, count);
    let report = audit(&net, ds, None)?;
    Ok((net, report))
}

/// Narrow, deeper memorizer with short weights: `⌈N/B²⌉` chained subnetworks.
pub fn assemble_bounded_bits(ds: &Dataset, b: u64, cfg: &BuildConfig) -> Result<(LayeredNet, AuditReport)> {
    let vc = VariantConfig {
        mode: VariantMode::BoundedBits,
        param: b,
    };
    let p = prepare(ds, &vc, cfg)?;
    let subs = subnets(ds, &p, vc.subset_size(), true)?;
    let count = subs.len();

    // (x, y) ↦ (x, y + out(x)) for each subnetwork
    let add = LayeredNet::new(
        3,
        vec![AffineLayer::new(
            3,
            vec![vec![(0, Dyadic::one())], vec![(1, Dyadic::one()), (2, Dyadic::one())]],
            vec![Dyadic::zero(), Dyadic::zero()],
            false,
        )?],
        "accumulate",
    )?;
    let blocks: Vec<LayeredNet> = par::map(&subs, |s| compose_affine(&extend_identity(&s.net, 1, Side::Append), &add))
        .into_iter()
        .collect::<Result<_>>()?;

    // projection with a zero running label appended
    let mut layers = p.net.layers().to_vec();
    let last = layers.pop().expect("projection has two layers");
    let scale = last.rows()[0].clone();
    layers.push(AffineLayer::new(1, vec![scale, vec![]], vec![Dyadic::zero(), Dyadic::zero()], false)?);
    let mut net = LayeredNet::new(ds.dim(), layers, "projection")?;

    let mut ends = Vec::with_capacity(count);
    for block in &blocks {
        net = compose_serial(&net, block)?;
        ends.push(net.depth() - 1);
    }
    let select = LayeredNet::new(
        2,
        vec![AffineLayer::new(2, vec![vec![(1, Dyadic::one())]], vec![Dyadic::zero()], false)?],
        "select",
    )?;
    net = compose_serial(&net, &select)?;
    net.set_provenance("bounded_bits");
    annotate(&mut net, ds, &p, cfg, "B", b, count);
    net.annotate(
        "block_ends",
        ends.iter().map(|e| e.to_string()).collect::<Vec<_>>().join(","),
    );
    let report = audit(&net, ds, None)?;
    Ok((net, report))
}
