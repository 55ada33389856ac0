//! Small verified building blocks: the triangle function, an interval
//! indicator, a distance gate, and triangle-based bit extraction.
//!
//! Depth follows [`LayeredNet::depth`], which counts the closing affine layer.
//! The indicator, gate and extractor therefore report one more layer than
//! their number of ReLU layers.

use crate::error::{Error, Result};
use crate::exactnum::{len, BigNat, Dyadic};
use crate::netir::{LayeredNet, Lin, NetBuilder, Plan};

fn k(v: i64) -> Dyadic {
    Dyadic::from_int(v)
}

/// Gadget kinds and their integer parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GadgetSpec {
    Triangle,
    Indicator { a: BigNat, b: BigNat },
    Distance,
    BitExtract { n: u64, i: u64, j: u64 },
}

impl GadgetSpec {
    pub fn build(&self) -> Result<LayeredNet> {
        match self {
            GadgetSpec::Triangle => Ok(build_triangle()),
            GadgetSpec::Indicator { a, b } => build_indicator(a, b),
            GadgetSpec::Distance => Ok(build_distance_gate()),
            GadgetSpec::BitExtract { n, i, j } => build_bit_extractor(*n, *i, *j),
        }
    }
}

/// The triangle function `φ(z) = σ(σ(2z) − σ(4z − 2))`, evaluated directly.
pub fn triangle(z: &Dyadic) -> Dyadic {
    let a = (&k(2) * z).relu();
    let b = (&k(4) * z - &k(2)).relu();
    (a - b).relu()
}

/// `φ` applied `times` times.
pub fn triangle_iter(z: &Dyadic, times: u64) -> Dyadic {
    let mut v = z.clone();
    for _ in 0..times {
        v = triangle(&v);
    }
    v
}

/// Width 2, depth 2: `σ(2z) − σ(4z − 2)`, which equals `φ` on `(−∞, 1]`.
///
/// The outer ReLU of `φ` is supplied by whatever layer consumes the output.
pub fn build_triangle() -> LayeredNet {
    let mut b = NetBuilder::new(1);
    let z = b.input(0);
    let mut p = Plan::new();
    let up = p.relu(z.scaled(&k(2)));
    let down = p.relu(z.scaled(&k(4)).offset(&k(-2)));
    let h = b.layer(p).expect("triangle layer");
    b.finish(&[&h[up] - &h[down]], "triangle")
        .expect("triangle net")
}

/// Two nested ReLU layers computing `σ(1 − σ(lo_arg)) + σ(1 − σ(hi_arg)) − 1`.
fn plateau(b: &mut NetBuilder, lo_arg: Lin, hi_arg: Lin) -> Result<Lin> {
    let mut p = Plan::new();
    let s1 = p.relu(lo_arg);
    let s2 = p.relu(hi_arg);
    let h = b.layer(p)?;
    let one = Lin::constant(Dyadic::one());
    let mut p = Plan::new();
    let g1 = p.relu(&one - &h[s1]);
    let g2 = p.relu(&one - &h[s2]);
    let g = b.layer(p)?;
    Ok((&g[g1] + &g[g2]).offset(&k(-1)))
}

/// `1` on `[a, b]`, `0` outside `[a − 1/2, b + 1/2]`, linear ramps between.
///
/// Formula: `σ(1 − σ(2a − 2x)) + σ(1 − σ(2x − 2b)) − 1`.
pub fn build_indicator(a: &BigNat, b: &BigNat) -> Result<LayeredNet> {
    if a >= b {
        return Err(Error::Parameter(format!("indicator needs a < b, got a={a}, b={b}")));
    }
    let two_a = Dyadic::from_nat(a).mul_pow2(1);
    let two_b = Dyadic::from_nat(b).mul_pow2(1);
    let mut nb = NetBuilder::new(1);
    let x = nb.input(0);
    let out = plateau(
        &mut nb,
        x.scaled(&k(-2)).offset(&two_a),
        x.scaled(&k(2)).offset(&-two_b),
    )?;
    nb.finish(&[out], "indicator")
}

/// Input `(x, y)`: `1` when `x ∈ [y, y + 1]`, `0` when `x < y − 1/2` or `x > y + 3/2`.
///
/// Formula: `σ(1 − σ(2y − 2x)) + σ(1 − σ(2x − 2y − 2)) − 1`.
pub fn build_distance_gate() -> LayeredNet {
    let mut nb = NetBuilder::new(2);
    let (x, y) = (nb.input(0), nb.input(1));
    let diff = &x.scaled(&k(2)) - &y.scaled(&k(2));
    let out = plateau(&mut nb, diff.scaled(&k(-1)), diff.offset(&k(-2))).expect("gate layers");
    nb.finish(&[out], "distance_gate").expect("gate net")
}

/// Sampling points used to read bits of an `n`-bit `x`: the midpoint and the
/// quarter point of the cell `[x/2^n, (x+1)/2^n]`.
pub fn probe_points(x: &BigNat, n: u64) -> (Dyadic, Dyadic) {
    let base = Dyadic::from_nat(x).mul_pow2(-(n as i64));
    let mid = &base + &Dyadic::pow2(-(n as i64) - 1);
    let quarter = &base + &Dyadic::pow2(-(n as i64) - 2);
    (mid, quarter)
}

/// Raw value of `2^(n+2−i+skew) · σ(φ⁽ⁱ⁾(quarter) − φ⁽ⁱ⁾(mid))`.
///
/// `skew = 0` is the correct formula; other values exist so the oracle
/// harness can prove it detects a wrong exponent.
pub fn bin_bit_value(x: &BigNat, n: u64, i: u64, skew: i64) -> Result<Dyadic> {
    if i == 0 || i > n {
        return Err(Error::Index(format!("bit {i} outside 1..={n}")));
    }
    if len(x) > n {
        return Err(Error::Index(format!("{x} has more than {n} bits")));
    }
    let (mid, quarter) = probe_points(x, n);
    let diff = triangle_iter(&quarter, i) - triangle_iter(&mid, i);
    Ok(diff.relu().mul_pow2(n as i64 + 2 - i as i64 + skew))
}

/// Bit `i` (MSB first) of the `n`-bit padded `x`, read through the triangle function.
pub fn bin_bit_formula(x: &BigNat, n: u64, i: u64) -> Result<u8> {
    let v = bin_bit_value(x, n, i, 0)?;
    if v.is_zero() {
        Ok(0)
    } else if v == Dyadic::one() {
        Ok(1)
    } else {
        Err(Error::Parameter(format!("bit formula produced {v}")))
    }
}

/// One lane of triangle iterates: `(φ⁽ᵏ⁾(mid), φ⁽ᵏ⁾(quarter))` as expressions.
#[derive(Clone, Debug)]
pub(crate) struct Track {
    pub mid: Lin,
    pub quarter: Lin,
}

/// Slot indices of a track inside a plan, one variant per step phase.
#[derive(Clone, Copy)]
pub(crate) struct Pre([usize; 4]);
#[derive(Clone, Copy)]
pub(crate) struct Post([usize; 2]);
#[derive(Clone, Copy)]
pub(crate) struct Tapped {
    mid: usize,
    quarter: usize,
    tap: usize,
}

impl Track {
    /// Phase 1: the four inner ReLU pre-activations of `φ` on both points.
    pub(crate) fn push_pre(&self, p: &mut Plan) -> Pre {
        Pre([
            p.relu(self.mid.scaled(&k(2))),
            p.relu(self.mid.scaled(&k(4)).offset(&k(-2))),
            p.relu(self.quarter.scaled(&k(2))),
            p.relu(self.quarter.scaled(&k(4)).offset(&k(-2))),
        ])
    }

    /// Carries the track unchanged through one layer.
    pub(crate) fn push_idle(&self, p: &mut Plan) -> Post {
        Post([p.pass(self.mid.clone()), p.pass(self.quarter.clone())])
    }

    pub(crate) fn after_idle(h: &[Lin], s: Post) -> Track {
        Track {
            mid: h[s.0[0]].clone(),
            quarter: h[s.0[1]].clone(),
        }
    }
}

impl Pre {
    /// Phase 2: `φ` on both points (outer ReLU).
    pub(crate) fn push_phi(self, h: &[Lin], p: &mut Plan) -> Post {
        let s = self.0;
        Post([
            p.relu(&h[s[0]] - &h[s[1]]),
            p.relu(&h[s[2]] - &h[s[3]]),
        ])
    }
}

impl Post {
    /// Phase 3: keep both iterates and tap `σ(quarter − mid)`.
    pub(crate) fn push_tap(self, h: &[Lin], p: &mut Plan) -> Tapped {
        let (m, q) = (&h[self.0[0]], &h[self.0[1]]);
        Tapped {
            mid: p.pass(m.clone()),
            quarter: p.pass(q.clone()),
            tap: p.relu(q - m),
        }
    }
}

impl Tapped {
    /// The advanced track and the tap expression (`2^(i−n−2)` when the bit is set).
    pub(crate) fn finish(self, h: &[Lin]) -> (Track, Lin) {
        (
            Track {
                mid: h[self.mid].clone(),
                quarter: h[self.quarter].clone(),
            },
            h[self.tap].clone(),
        )
    }
}

/// Maps `(φ⁽ⁱ⁻¹⁾(mid), φ⁽ⁱ⁻¹⁾(quarter))` to `(φ⁽ʲ⁾(mid), φ⁽ʲ⁾(quarter), bin_{i:j}(x))`
/// for every `x < 2^n`, where mid/quarter are [`probe_points`] of `x`.
///
/// Width 5; three ReLU layers per extracted bit, then the output layer.
pub fn build_bit_extractor(n: u64, i: u64, j: u64) -> Result<LayeredNet> {
    if i == 0 || i > j || j > n {
        return Err(Error::Index(format!("extractor range {i}..={j} invalid for n={n}")));
    }
    let c = j - i;
    let mut nb = NetBuilder::new(2);
    let mut track = Track {
        mid: nb.input(0),
        quarter: nb.input(1),
    };
    let mut acc: Option<Lin> = None;
    for step in 0..=c {
        let bit = i + step;
        let mut p = Plan::new();
        let pre = track.push_pre(&mut p);
        let a = acc.take().map(|l| p.pass(l));
        let h = nb.layer(p)?;
        let acc1 = a.map(|s| h[s].clone());

        let mut p = Plan::new();
        let post = pre.push_phi(&h, &mut p);
        let a = acc1.map(|l| p.pass(l));
        let h = nb.layer(p)?;
        let acc2 = a.map(|s| h[s].clone());

        let mut p = Plan::new();
        let tapped = post.push_tap(&h, &mut p);
        let a = acc2.map(|l| p.pass(l));
        let h = nb.layer(p)?;
        let (next, tap) = tapped.finish(&h);
        track = next;
        // 2^(n+2−bit) turns the tap into the bit; 2^(c−step) places it
        let weight = Dyadic::pow2(n as i64 + 2 - bit as i64 + (c - step) as i64);
        let term = tap.scaled(&weight);
        acc = Some(match a {
            Some(s) => &h[s] + &term,
            None => term,
        });
    }
    let out = [track.mid, track.quarter, acc.expect("at least one step")];
    nb.finish(&out, "bit_extractor")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactnum::bin_range;

    fn d(m: i64, s: i64) -> Dyadic {
        Dyadic::ratio_pow2(m, s)
    }

    fn nat(v: u64) -> BigNat {
        BigNat::from(v)
    }

    #[test]
    fn triangle_examples() {
        let t = build_triangle();
        assert_eq!(t.eval_exact(&[d(0, 0)]).unwrap(), vec![d(0, 0)]);
        assert_eq!(t.eval_exact(&[d(1, 1)]).unwrap(), vec![d(1, 0)]);
        assert_eq!(t.eval_exact(&[d(1, 2)]).unwrap(), vec![d(1, 1)]);
        assert_eq!(t.eval_exact(&[d(1, 0)]).unwrap(), vec![d(0, 0)]);
        let m = t.metrics();
        assert_eq!((m.width, m.depth), (2, 2));
    }

    #[test]
    fn indicator_examples() {
        let f = build_indicator(&nat(2), &nat(5)).unwrap();
        let at = |m: i64, s: i64| f.eval_exact(&[d(m, s)]).unwrap()[0].clone();
        assert_eq!(at(2, 0), d(1, 0));
        assert_eq!(at(5, 0), d(1, 0));
        // 1.4 and 5.6 are not dyadic; 1.375 and 5.625 lie in the same zero regions
        let r = |num: i64, den: i64| {
            num_rational::BigRational::new(num.into(), den.into())
        };
        let zero = r(0, 1);
        assert_eq!(f.eval_rational(&[r(14, 10)]).unwrap()[0], zero);
        assert_eq!(f.eval_rational(&[r(56, 10)]).unwrap()[0], zero);
        assert_eq!(at(11, 3), d(0, 0));
        assert_eq!(at(45, 3), d(0, 0));
        assert_eq!(at(21, 2), d(1, 1));
        let m = f.metrics();
        assert_eq!((m.width, m.depth), (2, 3));
        assert!(m.bits <= len(&nat(5)));
    }

    #[test]
    fn indicator_rejects_empty_interval() {
        assert!(matches!(build_indicator(&nat(5), &nat(5)), Err(Error::Parameter(_))));
        assert!(matches!(build_indicator(&nat(6), &nat(5)), Err(Error::Parameter(_))));
    }

    #[test]
    fn distance_gate_examples() {
        let g = build_distance_gate();
        let at = |x: Dyadic, y: Dyadic| g.eval_exact(&[x, y]).unwrap()[0].clone();
        assert_eq!(at(d(7, 1), d(3, 0)), d(1, 0));
        assert_eq!(at(d(1, 0), d(3, 0)), d(0, 0));
        assert_eq!(at(d(17, 2), d(3, 0)), d(1, 1));
        let m = g.metrics();
        assert_eq!((m.width, m.depth), (2, 3));
        assert!(m.bits <= 2);
    }

    #[test]
    fn bit_formula_examples() {
        assert_eq!(bin_bit_formula(&nat(5), 3, 1).unwrap(), 1);
        assert_eq!(bin_bit_formula(&nat(5), 3, 2).unwrap(), 0);
        for i in 1..=4 {
            assert_eq!(bin_bit_formula(&nat(0), 4, i).unwrap(), 0);
        }
        assert!(matches!(bin_bit_formula(&nat(5), 3, 4), Err(Error::Index(_))));
        assert!(matches!(bin_bit_formula(&nat(9), 3, 1), Err(Error::Index(_))));
    }

    #[test]
    fn bit_formula_matches_slicing_exhaustively() {
        for n in 1..=10u64 {
            for x in 0..(1u64 << n) {
                for i in 1..=n {
                    let want = bin_range(&nat(x), i, i, n).unwrap();
                    assert_eq!(
                        BigNat::from(bin_bit_formula(&nat(x), n, i).unwrap()),
                        want,
                        "x={x} n={n} i={i}"
                    );
                }
            }
        }
    }

    fn run_extractor(net: &LayeredNet, x: u64, n: u64, i: u64) -> Vec<Dyadic> {
        let (mid, quarter) = probe_points(&nat(x), n);
        net.eval_checked(&[triangle_iter(&mid, i - 1), triangle_iter(&quarter, i - 1)])
            .unwrap()
    }

    #[test]
    fn extractor_examples() {
        let net = build_bit_extractor(4, 1, 4).unwrap();
        assert_eq!(run_extractor(&net, 11, 4, 1)[2], d(11, 0));
        let net = build_bit_extractor(3, 2, 3).unwrap();
        assert_eq!(run_extractor(&net, 5, 3, 2)[2], d(1, 0));
    }

    #[test]
    fn extractor_metrics() {
        for (n, i, j) in [(4, 1, 4), (6, 2, 5), (3, 3, 3)] {
            let m = build_bit_extractor(n, i, j).unwrap().metrics();
            assert_eq!(m.depth as u64, 3 * (j - i + 1) + 1);
            assert_eq!(m.width, if i == j { 4 } else { 5 });
            assert!(m.bits <= n + 2);
        }
    }

    #[test]
    fn extractor_outputs_advanced_iterates() {
        let (n, i, j) = (5, 2, 4);
        let net = build_bit_extractor(n, i, j).unwrap();
        for x in 0..32 {
            let out = run_extractor(&net, x, n, i);
            let (mid, quarter) = probe_points(&nat(x), n);
            assert_eq!(out[0], triangle_iter(&mid, j));
            assert_eq!(out[1], triangle_iter(&quarter, j));
            assert_eq!(out[2], Dyadic::from_nat(&bin_range(&nat(x), i, j, n).unwrap()));
        }
    }

    #[test]
    fn extractor_rejects_bad_ranges() {
        assert!(build_bit_extractor(4, 3, 2).is_err());
        assert!(build_bit_extractor(4, 0, 2).is_err());
        assert!(build_bit_extractor(4, 2, 5).is_err());
    }

    #[test]
    fn descriptor_builds_each_gadget() {
        let net = GadgetSpec::BitExtract { n: 3, i: 1, j: 3 }.build().unwrap();
        assert_eq!(net.output_dim(), 3);
        assert_eq!(GadgetSpec::Triangle.build().unwrap(), build_triangle());
    }
}
