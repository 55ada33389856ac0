use super::codes::CraftedCode;
use crate::error::Result;
use crate::exactnum::Dyadic;
use crate::netir::{LayeredNet, Lin, NetBuilder, Plan};

/// Bucket selector: `x ↦ (x, w_j, u_j)` where `j` is the bucket whose
/// interval contains `⌊x⌋`, and `(x, 0, 0)` away from every interval.
///
/// Two ReLU layers per bucket; width 5 (x, both accumulators, two ramp units).
pub fn build_stage2(code: &CraftedCode) -> Result<LayeredNet> {
    let mut nb = NetBuilder::new(1);
    let mut x = nb.input(0);
    let mut acc: Option<(Lin, Lin)> = None;
    let one = Lin::constant(Dyadic::one());
    for j in 0..code.bucket_count {
        let (a, b) = &code.intervals[j];
        let two_a = Dyadic::from_nat(a).mul_pow2(1);
        let two_b = Dyadic::from_nat(b).mul_pow2(1);

        let mut p = Plan::new();
        let xs = p.pass(x.clone());
        let carried = acc.take().map(|(w, u)| (p.pass(w), p.pass(u)));
        let lo = p.relu(x.scaled(&Dyadic::from_int(-2)).offset(&two_a));
        let hi = p.relu(x.scaled(&Dyadic::from_int(2)).offset(&-two_b));
        let h = nb.layer(p)?;

        let mut p = Plan::new();
        let xs2 = p.pass(h[xs].clone());
        let carried = carried.map(|(w, u)| (p.pass(h[w].clone()), p.pass(h[u].clone())));
        let g1 = p.relu(&one - &h[lo]);
        let g2 = p.relu(&one - &h[hi]);
        let g = nb.layer(p)?;

        // indicator value in [0, 1]; exactly 1 inside, 0 beyond the half margins
        let ind = (&g[g1] + &g[g2]).offset(&Dyadic::from_int(-1));
        let wj = ind.scaled(&Dyadic::from_nat(&code.w[j]));
        let uj = ind.scaled(&Dyadic::from_nat(&code.u[j]));
        acc = Some(match carried {
            Some((w, u)) => (&g[w] + &wj, &g[u] + &uj),
            None => (wj, uj),
        });
        x = g[xs2].clone();
    }
    let (w, u) = acc.expect("at least one bucket");
    nb.finish(&[x, w, u], "bucket_select")
}

#[cfg(test)]
mod tests {
    use num_rational::BigRational;

    use super::*;
    use crate::exactnum::BigNat;
    use crate::pipeline::codes::craft_codes;

    fn r(num: i64, den: i64) -> BigRational {
        BigRational::new(num.into(), den.into())
    }

    #[test]
    fn one_bucket_always_selects() {
        let z = [r(42, 10), r(97, 10)];
        let code = craft_codes(&z, &[3, 1], 3, 1, &BigNat::from(9u8)).unwrap();
        let net = build_stage2(&code).unwrap();
        for x in &z {
            let out = net.eval_checked(std::slice::from_ref(x)).unwrap();
            assert_eq!(out, vec![x.clone(), r(13, 1), r(73, 1)]);
        }
    }

    #[test]
    fn two_buckets_select_their_own_codes() {
        let z: Vec<_> = [1, 4, 8, 11, 15].iter().map(|&v| r(2 * v + 1, 2)).collect();
        let gmf = BigNat::from(15u8);
        let code = craft_codes(&z, &[1, 2, 3, 1, 2], 3, 2, &gmf).unwrap();
        assert_eq!(code.bucket_size, 3);
        let net = build_stage2(&code).unwrap();
        for (i, x) in z.iter().enumerate() {
            let j = i / 3;
            let out = net.eval_checked(std::slice::from_ref(x)).unwrap();
            assert_eq!(out[1], BigRational::from_integer(code.w[j].clone().into()));
            assert_eq!(out[2], BigRational::from_integer(code.u[j].clone().into()));
        }
        let m = net.metrics();
        assert_eq!(m.width, 5);
        assert_eq!(m.depth, 2 * code.bucket_count + 1);
    }

    #[test]
    fn far_inputs_select_nothing() {
        let z = [r(4, 1), r(6, 1)];
        let code = craft_codes(&z, &[1, 2], 2, 1, &BigNat::from(6u8)).unwrap();
        let net = build_stage2(&code).unwrap();
        let out = net.eval_checked(&[r(20, 1)]).unwrap();
        assert_eq!(out, vec![r(20, 1), r(0, 1), r(0, 1)]);
    }
}
