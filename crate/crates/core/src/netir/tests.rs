use num_bigint::BigInt;
use num_traits::One;
use proptest::prelude::*;

use super::*;

fn d(m: i64, k: i64) -> Dyadic {
    Dyadic::ratio_pow2(m, k)
}

/// σ(2z) − σ(4z − 2), built by hand so these tests do not depend on the gadgets module.
fn triangle() -> LayeredNet {
    let mut b = NetBuilder::new(1);
    let z = b.input(0);
    let mut p = Plan::new();
    let h1 = p.relu(z.scaled(&d(2, 0)));
    let h2 = p.relu(z.scaled(&d(4, 0)).offset(&d(-2, 0)));
    let h = b.layer(p).unwrap();
    b.finish(&[&h[h1] - &h[h2]], "triangle").unwrap()
}

fn phi(z: &Dyadic) -> Dyadic {
    let two = d(2, 0);
    let a = (&two * z).relu();
    let b = (&d(4, 0) * z - &two).relu();
    (a - b).relu()
}

#[test]
fn identity_passes_input_through() {
    let id = LayeredNet::identity(1);
    assert_eq!(id.eval_exact(&[d(3, 1)]).unwrap(), vec![d(3, 1)]);
    assert_eq!(id.eval_float(&[1.5]).unwrap(), vec![1.5]);
    assert_eq!(id.depth(), 1);
    assert_eq!(id.width(), 0);
}

#[test]
fn triangle_values() {
    let t = triangle();
    assert_eq!(t.eval_exact(&[d(1, 2)]).unwrap(), vec![d(1, 1)]);
    assert_eq!(t.eval_float(&[0.25]).unwrap(), vec![0.5]);
    assert_eq!(t.metrics().depth, 2);
    assert_eq!(t.metrics().width, 2);
}

#[test]
fn float_evaluation_loses_wide_weights() {
    // 1·(2^100 + 1) − 2^100 = 1 exactly, but 2^100 + 1 is not a double
    let big = Dyadic::new((BigInt::one() << 100u32) + 1, 0);
    let layer = AffineLayer::new(1, vec![vec![(0, big)]], vec![-Dyadic::pow2(100)], false).unwrap();
    let net = LayeredNet::new(1, vec![layer], "wide").unwrap();
    assert_eq!(net.eval_exact(&[Dyadic::one()]).unwrap(), vec![Dyadic::one()]);
    assert_eq!(net.eval_float(&[1.0]).unwrap(), vec![0.0]);
    assert_eq!(net.bits(), 101);
}

#[test]
fn dimension_mismatch_is_reported() {
    let id = LayeredNet::identity(2);
    assert_eq!(
        id.eval_exact(&[Dyadic::one()]),
        Err(Error::Dimension {
            expected: 2,
            got: 1
        })
    );
    assert!(compose_serial(&LayeredNet::identity(1), &id).is_err());
    assert!(stack_parallel(&[LayeredNet::identity(1), id]).is_err());
}

#[test]
fn compose_identities() {
    let c = compose_serial(&LayeredNet::identity(1), &LayeredNet::identity(1)).unwrap();
    assert_eq!(c.depth(), 2);
    for k in 0..16 {
        let x = d(k, 2);
        assert_eq!(c.eval_checked(std::slice::from_ref(&x)).unwrap(), vec![x]);
    }
}

#[test]
fn compose_triangles_iterates_phi() {
    let t = triangle();
    let t2 = compose_serial(&t, &t).unwrap();
    assert_eq!(t2.depth(), 4);
    let n = 8;
    for k in 0..=(1 << n) {
        let x = d(k, n);
        let want = phi(&phi(&x));
        assert_eq!(t2.eval_checked(&[x]).unwrap(), vec![want]);
    }
}

#[test]
fn affine_fusion_preserves_function() {
    let t = triangle();
    let fused = compose_affine(&t, &t).unwrap();
    let joined = compose_serial(&t, &t).unwrap();
    assert_eq!(fused.depth(), 3);
    // without the joining ReLU the fused net is ψ∘ψ, which equals φ∘φ where ψ ≥ 0
    for k in 0..=64 {
        let x = d(k, 6);
        assert_eq!(fused.eval_exact(std::slice::from_ref(&x)), joined.eval_exact(&[x]));
    }
}

#[test]
fn stack_of_one_is_itself() {
    let t = triangle();
    assert_eq!(stack_parallel(std::slice::from_ref(&t)).unwrap(), t);
}

#[test]
fn stack_evaluates_componentwise_and_pads() {
    let t = triangle();
    let t2 = compose_serial(&t, &t).unwrap();
    let s = stack_parallel(&[t.clone(), t2.clone()]).unwrap();
    assert_eq!(s.depth(), 4);
    assert_eq!(s.output_dim(), 2);
    // padding t adds one identity weight per padded layer
    assert_eq!(s.params(), t.params() + t2.params() + 2);
    for k in 0..=32 {
        let x = vec![d(k, 5)];
        let want = vec![
            t.eval_exact(&x).unwrap()[0].clone(),
            t2.eval_exact(&x).unwrap()[0].clone(),
        ];
        assert_eq!(s.eval_checked(&x).unwrap(), want);
    }
}

#[test]
fn stack_params_are_additive_for_equal_depths() {
    let t = triangle();
    let s = stack_parallel(&[t.clone(), t.clone(), t.clone()]).unwrap();
    assert_eq!(s.params(), 3 * t.params());
    assert_eq!(s.width(), 3 * t.width());
}

#[test]
fn extend_identity_carries_channels() {
    let id = LayeredNet::identity(1);
    let e = extend_identity(&id, 1, Side::Append);
    assert_eq!(e.eval_checked(&[d(-3, 0), d(5, 0)]).unwrap(), vec![d(-3, 0), d(5, 0)]);

    let t = triangle();
    let e = extend_identity(&t, 1, Side::Append);
    assert_eq!(e.params(), t.params() + t.depth());
    let out = e.eval_checked(&[d(1, 2), d(7, 1)]).unwrap();
    assert_eq!(out, vec![d(1, 1), d(7, 1)]);

    let p = extend_identity(&t, 2, Side::Prepend);
    let out = p.eval_checked(&[d(1, 0), d(2, 0), d(1, 2)]).unwrap();
    assert_eq!(out, vec![d(1, 0), d(2, 0), d(1, 1)]);
}

#[test]
fn negative_pass_through_is_a_contract_violation() {
    let e = extend_identity(&triangle(), 1, Side::Append);
    let err = e.eval_checked(&[d(1, 2), d(-1, 0)]).unwrap_err();
    assert!(matches!(err, Error::ContractViolation { layer: 0, unit: 2, .. }));
    // the unchecked evaluator silently clamps it
    assert_eq!(e.eval_exact(&[d(1, 2), d(-1, 0)]).unwrap()[1], Dyadic::zero());
}

#[test]
fn relu_flags_are_validated() {
    let l = AffineLayer::new(1, vec![vec![(0, Dyadic::one())]], vec![Dyadic::zero()], true).unwrap();
    assert!(LayeredNet::new(1, vec![l], "bad").is_err());
}

#[test]
fn json_rejects_tampered_metrics() {
    let s = triangle().to_json().replace("\"params\":5", "\"params\":4");
    assert!(matches!(LayeredNet::from_json(&s), Err(Error::Schema(_))));
}

fn small_net() -> impl Strategy<Value = LayeredNet> {
    let dims = proptest::collection::vec(1usize..5, 2..5);
    dims.prop_flat_map(|dims| {
        let shapes: Vec<(usize, usize)> = dims.windows(2).map(|w| (w[0], w[1])).collect();
        let layer_strats: Vec<_> = shapes
            .iter()
            .map(|&(i, o)| {
                proptest::collection::vec(
                    proptest::collection::vec((-40i64..40, -6i64..6), i + 1),
                    o,
                )
            })
            .collect();
        (Just(dims), layer_strats)
    })
    .prop_map(|(dims, raw)| {
        let last = raw.len() - 1;
        let layers = raw
            .into_iter()
            .enumerate()
            .map(|(li, rows)| {
                let in_dim = dims[li];
                let mut ws = Vec::new();
                let mut bs = Vec::new();
                for r in rows {
                    ws.push(
                        r[..in_dim]
                            .iter()
                            .enumerate()
                            .map(|(c, &(m, e))| (c, Dyadic::new(BigInt::from(m), e)))
                            .collect(),
                    );
                    bs.push(Dyadic::new(BigInt::from(r[in_dim].0), r[in_dim].1));
                }
                AffineLayer::new(in_dim, ws, bs, li != last).unwrap()
            })
            .collect();
        LayeredNet::new(dims[0], layers, "random").unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn serialization_round_trip_is_bit_exact(
        net in small_net(),
        xs in proptest::collection::vec(proptest::collection::vec((-64i64..64, 0i64..5), 4), 8),
    ) {
        let back = LayeredNet::from_json(&net.to_json()).unwrap();
        prop_assert_eq!(&back, &net);
        for x in xs {
            let x: Vec<Dyadic> = x[..net.input_dim()].iter().map(|&(m, k)| d(m, k)).collect();
            prop_assert_eq!(back.eval_exact(&x).unwrap(), net.eval_exact(&x).unwrap());
        }
    }

    #[test]
    fn exact_matches_rational_evaluation(
        net in small_net(),
        x in proptest::collection::vec((-64i64..64, 0i64..5), 4),
    ) {
        let xd: Vec<Dyadic> = x[..net.input_dim()].iter().map(|&(m, k)| d(m, k)).collect();
        let xr: Vec<_> = xd.iter().map(Dyadic::to_rational).collect();
        let exact: Vec<_> = net.eval_exact(&xd).unwrap().iter().map(Dyadic::to_rational).collect();
        prop_assert_eq!(exact, net.eval_rational(&xr).unwrap());
    }

    #[test]
    fn compose_depth_is_additive(a in small_net(), extra in 1usize..4) {
        let mut b = LayeredNet::identity(a.output_dim());
        for _ in 1..extra {
            b = compose_serial(&b, &LayeredNet::identity(a.output_dim())).unwrap();
        }
        let c = compose_serial(&a, &b).unwrap();
        prop_assert_eq!(c.depth(), a.depth() + b.depth());
        prop_assert_eq!(compose_affine(&a, &b).unwrap().depth(), a.depth() + b.depth() - 1);
    }
}
