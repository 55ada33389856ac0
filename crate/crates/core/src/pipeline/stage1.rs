use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::exactnum::Dyadic;
use crate::netir::{AffineLayer, LayeredNet};

/// Direction samples tried before giving up, unless `MEMNET_RETRY_BUDGET` overrides it.
pub const DEFAULT_RETRY_BUDGET: usize = 256;

/// Valid directions collected before picking the one with the smallest range.
pub const DEFAULT_CANDIDATES: usize = 4;

pub fn retry_budget_from_env() -> usize {
    std::env::var("MEMNET_RETRY_BUDGET")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(DEFAULT_RETRY_BUDGET)
}

/// A dyadic line projection `z = scale·(ũᵀx + b)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Projection1D {
    pub direction: Vec<Dyadic>,
    pub bias: Dyadic,
    /// A power of two.
    pub scale: Dyadic,
    /// Largest projected training value.
    pub r_realized: BigRational,
    /// Projected training values, in dataset order.
    pub z: Vec<BigRational>,
    /// Fractional bits kept per direction coordinate.
    pub truncation_bits: u64,
}

impl Projection1D {
    pub fn project(&self, x: &[BigRational]) -> BigRational {
        let mut acc = self.bias.to_rational();
        for (u, v) in self.direction.iter().zip(x) {
            acc += u.to_rational() * v;
        }
        acc * self.scale.to_rational()
    }

    /// Width 1, depth 2: `scale·σ(ũᵀx + b)`.
    pub fn to_net(&self) -> LayeredNet {
        let d = self.direction.len();
        let row: Vec<(usize, Dyadic)> = self.direction.iter().cloned().enumerate().collect();
        let l1 = AffineLayer::new(d, vec![row], vec![self.bias.clone()], true).expect("projection layer");
        let l2 = AffineLayer::new(1, vec![vec![(0, self.scale.clone())]], vec![Dyadic::zero()], false)
            .expect("scale layer");
        LayeredNet::new(d, vec![l1, l2], "projection").expect("projection net")
    }
}

/// `⌈log2(d·N²·√π)⌉`, at least 1.
pub fn truncation_bits(d: usize, n: usize) -> u64 {
    let v = (d as f64) * (n as f64).powi(2) * std::f64::consts::PI.sqrt();
    (v.log2().ceil() as u64).max(1)
}

/// Each coordinate of `v/‖v‖` truncated toward zero to `t` fractional bits, computed exactly.
fn truncated_unit(v: &[BigInt], t: u64) -> Vec<Dyadic> {
    let norm_sq: BigInt = v.iter().map(|x| x * x).sum();
    v.iter()
        .map(|x| {
            // ⌊|x|·2^t / √S⌋ = ⌊√⌊x²·4^t / S⌋⌋
            let q: BigInt = (x * x) << (2 * t);
            let mag = q.div_floor(&norm_sq).sqrt();
            let m = if x.sign() == Sign::Minus { -mag } else { mag };
            Dyadic::new(m, -(t as i64))
        })
        .collect()
}

/// Flips the sign so the first nonzero coordinate is positive.
fn canonical_direction(mut u: Vec<Dyadic>) -> Vec<Dyadic> {
    if let Some(first) = u.iter().find(|c| !c.is_zero()) {
        if first.is_negative() {
            u = u.iter().map(|c| -c).collect();
        }
    }
    u
}

fn floor_rat(r: &BigRational) -> BigInt {
    r.floor().to_integer()
}

/// Smallest `s` with `gap·2^s ≥ 2`.
fn scale_exponent(gap: &BigRational) -> i64 {
    let two = BigRational::from_integer(2.into());
    let mut s: i64 = 0;
    let mut g = gap.clone();
    while g < two {
        g *= BigRational::from_integer(2.into());
        s += 1;
    }
    let half = BigRational::new(1.into(), 2.into());
    while &g * &half >= two {
        g *= &half;
        s -= 1;
    }
    s
}

/// Evaluates a direction; `None` when two projections coincide.
fn try_direction(ds: &Dataset, direction: Vec<Dyadic>, t: u64) -> Option<Projection1D> {
    let ur: Vec<BigRational> = direction.iter().map(Dyadic::to_rational).collect();
    let p: Vec<BigRational> = ds
        .points()
        .iter()
        .map(|x| ur.iter().zip(x).fold(BigRational::zero(), |a, (u, v)| a + u * v))
        .collect();
    let mut sorted = p.clone();
    sorted.sort();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return None;
    }
    let min_floor = floor_rat(&sorted[0]);
    let bias = BigInt::from(1) - min_floor.min(BigInt::zero());
    let gap = sorted.windows(2).map(|w| &w[1] - &w[0]).min();
    let s = gap.map_or(0, |g| scale_exponent(&g));
    let scale = Dyadic::pow2(s);
    let sr = scale.to_rational();
    let br = BigRational::from_integer(bias.clone());
    let z: Vec<BigRational> = p.iter().map(|v| (v + &br) * &sr).collect();
    let r_realized = z.iter().max().cloned().expect("nonempty");
    Some(Projection1D {
        direction,
        bias: Dyadic::from_bigint(bias),
        scale,
        r_realized,
        z,
        truncation_bits: t,
    })
}

/// Checks the projection contract exactly: `z ≥ 0`, pairwise gaps `≥ 2`, `z ≤ R`.
pub fn verify_projection(ds: &Dataset, proj: &Projection1D) -> Result<()> {
    let mut z: Vec<BigRational> = ds.points().iter().map(|x| proj.project(x)).collect();
    if z != proj.z {
        return Err(Error::Parameter("stored projections disagree with the direction".into()));
    }
    z.sort();
    let two = BigRational::from_integer(2.into());
    if z[0].is_negative() || z.windows(2).any(|w| &w[1] - &w[0] < two) || z[z.len() - 1] > proj.r_realized {
        return Err(Error::Parameter("projection violates separation contract".into()));
    }
    Ok(())
}

/// Samples directions from a seeded ChaCha stream and keeps the valid
/// candidate with the smallest projected range.
pub fn project_to_line(ds: &Dataset, seed: u64, budget: usize, candidates: usize) -> Result<(Projection1D, LayeredNet)> {
    let d = ds.dim();
    let t = truncation_bits(d, ds.len());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<Projection1D> = None;
    let mut seen: Vec<Vec<Dyadic>> = Vec::new();
    let mut valid = 0;
    for _ in 0..budget {
        let v: Vec<BigInt> = (0..d).map(|_| BigInt::from(rng.gen_range(-(1i64 << 20)..=(1i64 << 20)))).collect();
        if v.iter().all(Zero::is_zero) {
            continue;
        }
        let u = canonical_direction(truncated_unit(&v, t));
        if u.iter().all(Dyadic::is_zero) || seen.contains(&u) {
            continue;
        }
        seen.push(u.clone());
        if let Some(p) = try_direction(ds, u, t) {
            valid += 1;
            if best.as_ref().is_none_or(|b| p.r_realized < b.r_realized) {
                best = Some(p);
            }
            if valid >= candidates {
                break;
            }
        }
    }
    let proj = best.ok_or(Error::ProjectionSearchExhausted(budget))?;
    verify_projection(ds, &proj)?;
    let net = proj.to_net();
    Ok((proj, net))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64) -> BigRational {
        BigRational::from_integer(n.into())
    }

    #[test]
    fn one_dimensional_pair() {
        let ds = Dataset::from_classes(vec![vec![q(0)], vec![q(3)]], &[1, 2], 2).unwrap();
        let (p, net) = project_to_line(&ds, 1, 64, 4).unwrap();
        assert_eq!(p.direction, vec![Dyadic::one()]);
        assert_eq!(p.scale, Dyadic::one());
        let out = net.eval_rational(&ds.points()[1]).unwrap();
        assert_eq!(out[0], p.z[1]);
        assert_eq!(net.layers()[0].params(), 2);
        assert_eq!((net.width(), net.depth()), (1, 2));
    }

    #[test]
    fn collinear_points_in_the_plane() {
        let pts: Vec<_> = (0..6).map(|i| vec![q(i), q(2 * i)]).collect();
        let ds = Dataset::from_classes(pts, &[1, 2, 1, 2, 1, 2], 2).unwrap();
        let (p, _) = project_to_line(&ds, 3, 64, 4).unwrap();
        verify_projection(&ds, &p).unwrap();
    }

    #[test]
    fn truncated_unit_is_short_and_close() {
        let v = vec![BigInt::from(3), BigInt::from(-4)];
        let u = truncated_unit(&v, 8);
        assert_eq!(u[0], Dyadic::ratio_pow2(153, 8));
        assert_eq!(u[1], Dyadic::ratio_pow2(-204, 8));
    }

    #[test]
    fn scale_is_the_smallest_sufficient_power() {
        assert_eq!(scale_exponent(&q(2)), 0);
        assert_eq!(scale_exponent(&q(1)), 1);
        assert_eq!(scale_exponent(&BigRational::new(3.into(), 8.into())), 3);
        assert_eq!(scale_exponent(&q(9)), -2);
    }

    #[test]
    fn zero_budget_is_exhausted() {
        let ds = Dataset::from_classes(vec![vec![q(0)], vec![q(3)]], &[1, 2], 2).unwrap();
        assert_eq!(
            project_to_line(&ds, 1, 0, 4).unwrap_err(),
            Error::ProjectionSearchExhausted(0)
        );
    }

    #[test]
    fn same_seed_same_projection() {
        let pts: Vec<_> = (0..10).map(|i| vec![q(i * i % 7), q(i)]).collect();
        let ds = Dataset::from_classes(pts, &[1; 10], 1).unwrap();
        let a = project_to_line(&ds, 9, 64, 4).unwrap().0;
        let b = project_to_line(&ds, 9, 64, 4).unwrap().0;
        assert_eq!(a, b);
    }
}
