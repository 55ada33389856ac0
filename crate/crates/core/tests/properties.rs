use std::collections::BTreeSet;

use num_rational::BigRational;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

use memnet::bounds::{audit, lower_bound_params, LowerBound};
use memnet::exactnum::{pack_blocks, BigNat, Dyadic};
use memnet::netir::{AffineLayer, LayeredNet};
use memnet::pipeline::{
    assemble_sqrt, build_stage3, craft_codes, eval_point, floor_nat, project_sorted, BuildConfig, Dataset,
};
use memnet::variants::{assemble_bounded_bits, assemble_bounded_depth};

fn q(v: i64) -> BigRational {
    BigRational::from_integer(v.into())
}

/// Distinct points on a half-integer grid with labels in `1..=classes`.
fn dataset(max_n: usize) -> impl Strategy<Value = Dataset> {
    (1usize..=3, 1u64..=6).prop_flat_map(move |(d, classes)| {
        proptest::collection::vec((proptest::collection::vec(-12i64..=12, d), 1..=classes), 1..=max_n).prop_map(
            move |raw| {
                let mut seen = BTreeSet::new();
                let (pts, labels): (Vec<_>, Vec<_>) = raw
                    .into_iter()
                    .filter(|(p, _)| seen.insert(p.clone()))
                    .map(|(p, y)| (p.into_iter().map(|v| BigRational::new(v.into(), 2.into())).collect(), y))
                    .unzip();
                Dataset::from_classes(pts, &labels, classes).expect("distinct points")
            },
        )
    })
}

fn memorizes(net: &LayeredNet, ds: &Dataset) -> bool {
    ds.points()
        .iter()
        .zip(ds.labels())
        .all(|(x, y)| eval_point(net, x).map(|o| &o[0] == y).unwrap_or(false))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sqrt_memorizer_is_exact(ds in dataset(24), seed in any::<u64>()) {
        let (net, rep) = assemble_sqrt(&ds, &BuildConfig::with_seed(seed)).unwrap();
        prop_assert!(memorizes(&net, &ds));
        prop_assert!(rep.pass, "{:?}", rep.checks);
    }

    #[test]
    fn projection_separates_by_two(ds in dataset(24), seed in any::<u64>()) {
        let p = project_sorted(&ds, &BuildConfig::with_seed(seed)).unwrap();
        let z = &p.z_sorted;
        prop_assert!(z.iter().all(|v| !v.is_negative()));
        prop_assert!(z.windows(2).all(|w| &w[1] - &w[0] >= q(2)));
        prop_assert!(z.iter().all(|v| *v <= p.projection.r_realized));
        // the network computes the same projection
        for (x, zi) in ds.points().iter().zip(&p.projection.z) {
            prop_assert_eq!(&eval_point(&p.net, x).unwrap()[0], zi);
        }
    }

    #[test]
    fn variants_memorize_for_every_legal_parameter(ds in dataset(20), seed in any::<u64>(), pick in 0u64..100) {
        let top = (1..).find(|t: &u64| t * t >= ds.len() as u64).unwrap();
        let param = 1 + pick % top;
        let cfg = BuildConfig::with_seed(seed);
        let subsets = ds.len().div_ceil((param * param) as usize).to_string();
        let (net, rep) = assemble_bounded_depth(&ds, param, &cfg).unwrap();
        prop_assert!(memorizes(&net, &ds) && rep.pass, "{:?}", rep.checks);
        prop_assert_eq!(&net.annotations()["subsets"], &subsets);
        let (net, rep) = assemble_bounded_bits(&ds, param, &cfg).unwrap();
        prop_assert!(memorizes(&net, &ds) && rep.pass, "{:?}", rep.checks);
        prop_assert_eq!(&net.annotations()["subsets"], &subsets);
    }

    #[test]
    fn audit_is_pure_and_ratios_are_sane(ds in dataset(16), seed in any::<u64>()) {
        let (net, rep) = assemble_sqrt(&ds, &BuildConfig::with_seed(seed)).unwrap();
        let again = audit(&net, &ds, None).unwrap();
        prop_assert_eq!(&rep, &again);
        prop_assert!(rep.ratios.values().all(|r| r.is_finite() && *r > 0.0));
        prop_assert!(rep.realized.params as u64 >= lower_bound_params(ds.len() as u64, LowerBound::Sqrt));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn floors_keep_a_gap_of_two(a in 0i64..1_000_000, gap in 0i64..1_000_000, den in 1i64..64) {
        let za = BigRational::new(a.into(), den.into());
        let zb = &za + q(2) + BigRational::new(gap.into(), den.into());
        let (fa, fb) = (floor_nat(&za).unwrap(), floor_nat(&zb).unwrap());
        prop_assert!(fb >= fa + BigNat::from(2u8));
    }

    #[test]
    fn crafted_codes_hold_their_gaps(starts in proptest::collection::vec(0i64..8, 1..30), den in 1i64..5) {
        // z increasing by at least 2
        let mut z = vec![];
        let mut acc = BigRational::zero();
        for s in &starts {
            acc = &acc + q(2) + BigRational::new((*s).into(), den.into());
            z.push(acc.clone());
        }
        let labels: Vec<u64> = (0..z.len() as u64).map(|i| i % 3 + 1).collect();
        let gmf = floor_nat(z.last().unwrap()).unwrap();
        let code = craft_codes(&z, &labels, 3, memnet::pipeline::default_bucket_count(z.len()), &gmf).unwrap();
        prop_assert!(code.check_gaps().is_ok());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lookup_is_zero_far_from_every_block(
        raw in proptest::collection::vec(0u64..16, 1..4),
        wv in proptest::collection::vec(0u64..4, 4),
        xq in 0i64..200,
    ) {
        // spread the blocks at least 2 apart within 5 bits
        let mut blocks: Vec<u64> = raw.clone();
        blocks.sort();
        blocks.dedup();
        let blocks: Vec<u64> = blocks.iter().enumerate().map(|(i, b)| b + 2 * i as u64).collect();
        let n = blocks.len();
        let (rho, c) = (5u64, 2u64);
        let u = pack_blocks(&blocks.iter().map(|&b| BigNat::from(b)).collect::<Vec<_>>(), rho).unwrap();
        let w = pack_blocks(&wv[..n].iter().map(|&b| BigNat::from(b)).collect::<Vec<_>>(), c).unwrap();
        let x = Dyadic::ratio_pow2(xq, 2);
        let far = blocks.iter().all(|&b| {
            let b = Dyadic::from_int(b as i64);
            x < &b - &Dyadic::ratio_pow2(3, 1) || x > &b + &Dyadic::ratio_pow2(3, 1)
        });
        prop_assume!(far);
        let net = build_stage3(n, rho, c, false).unwrap();
        let out = net.eval_checked(&[x, Dyadic::from_nat(&w), Dyadic::from_nat(&u)]).unwrap();
        prop_assert!(out[0].is_zero());
    }

    #[test]
    fn summation_order_does_not_matter(
        weights in proptest::collection::vec((-50i64..50, -4i64..4), 1..6),
        xs in proptest::collection::vec((-50i64..50, 0i64..6), 6),
    ) {
        let k = weights.len();
        let row: Vec<(usize, Dyadic)> = weights.iter().enumerate().map(|(i, &(m, e))| (i, Dyadic::ratio_pow2(m, e))).collect();
        let mut rev = row.clone();
        rev.reverse();
        let mk = |r: Vec<(usize, Dyadic)>| {
            LayeredNet::new(k, vec![AffineLayer::new(k, vec![r], vec![Dyadic::zero()], false).unwrap()], "t").unwrap()
        };
        let x: Vec<Dyadic> = xs[..k].iter().map(|&(m, e)| Dyadic::ratio_pow2(m, e)).collect();
        prop_assert_eq!(mk(row).eval_exact(&x).unwrap(), mk(rev).eval_exact(&x).unwrap());
    }
}
