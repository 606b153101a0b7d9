use approx::assert_relative_eq;
use cpl_core::body::{ConvexBody, Subspace};
use cpl_core::constructions::mu_combine;
use cpl_core::distances::containment_lambda;
use cpl_core::families;
use cpl_core::linalg::{Matrix, Vector};
use cpl_core::measure;
use cpl_core::sampling::SamplerConfig;
use proptest::prelude::*;

fn body(kind: u8, n: usize, seed: u64) -> ConvexBody {
    match kind % 4 {
        0 => families::cube(n).unwrap(),
        1 => families::cross_polytope(n).unwrap(),
        2 => families::gaussian_polytope(n, 2 * n + 2, false, seed).unwrap(),
        _ => families::regular_simplex(n).unwrap(),
    }
}

fn vecn(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, n).prop_filter("nonzero", |v| v.iter().map(|x| x * x).sum::<f64>() > 1e-4)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn polar_of_polar_is_identity(kind in 0u8..4, seed in 0u64..50, x in vecn(3)) {
        let k = body(kind, 3, seed);
        let kpp = k.polar().unwrap().polar().unwrap();
        assert_relative_eq!(k.gauge(&x), kpp.gauge(&x), max_relative = 1e-7);
    }

    #[test]
    fn support_is_polar_gauge(kind in 0u8..4, seed in 0u64..50, u in vecn(4)) {
        let k = body(kind, 4, seed);
        assert_relative_eq!(k.support(&u), k.polar().unwrap().gauge(&u), max_relative = 1e-7);
    }

    #[test]
    fn gauge_is_positively_homogeneous(kind in 0u8..4, seed in 0u64..50, x in vecn(4), t in 0.01f64..50.0) {
        let k = body(kind, 4, seed);
        let tx: Vec<f64> = x.iter().map(|v| v * t).collect();
        assert_relative_eq!(k.gauge(&tx), t * k.gauge(&x), max_relative = 1e-10);
        // gauge of a scaled body
        assert_relative_eq!(k.scaled(t).unwrap().gauge(&x), k.gauge(&x) / t, max_relative = 1e-10);
    }

    #[test]
    fn gauge_and_support_pair(kind in 0u8..4, seed in 0u64..50, x in vecn(3), u in vecn(3)) {
        // <x,u> <= ||x||_K h_K(u)
        let k = body(kind, 3, seed);
        prop_assert!(dot(&x, &u) <= k.gauge(&x) * k.support(&u) * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn difference_body_is_symmetric(kind in 0u8..4, seed in 0u64..50, x in vecn(3)) {
        let b = body(kind, 3, seed).difference_body().unwrap();
        let mx: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_relative_eq!(b.gauge(&x), b.gauge(&mx), max_relative = 1e-9);
    }

    #[test]
    fn nested_bodies_order_gauges(kind in 0u8..4, seed in 0u64..50, x in vecn(3)) {
        // K ∩ -K ⊆ K ⊆ K - K
        let k = body(kind, 3, seed);
        let d = k.central_intersection().unwrap();
        let b = k.difference_body().unwrap();
        let g = k.gauge(&x);
        prop_assert!(b.gauge(&x) <= g * (1.0 + 1e-9));
        prop_assert!(g <= d.gauge(&x) * (1.0 + 1e-9));
    }

    #[test]
    fn section_projection_duality(kind in 0u8..4, seed in 0u64..50, a in vecn(4), b in vecn(4), y in vecn(2)) {
        let k = body(kind, 4, seed);
        let Ok(e) = Subspace::new(4, &[Vector::from_vec(a), Vector::from_vec(b)]) else { return Ok(()); };
        prop_assume!(e.dim() == 2);
        let lifted = e.embed(&Vector::from_vec(y.clone()));
        let direct = k.gauge(lifted.as_slice());
        let section = k.section(&e).unwrap().gauge(&y);
        let projected = k.polar().unwrap().project(&e).unwrap().support(&y);
        assert_relative_eq!(section, direct, max_relative = 1e-7);
        assert_relative_eq!(projected, direct, max_relative = 1e-7);
    }

    #[test]
    fn lambda_invariant_under_common_maps(seed in 0u64..50, entries in prop::collection::vec(-1.0f64..1.0, 9)) {
        // λ(AK, AD; T, 0) = λ(K, D; T, 0) when A commutes with T = I
        let k = families::cross_polytope(3).unwrap();
        let d = families::gaussian_polytope(3, 8, true, seed).unwrap();
        let a = Matrix::from_row_slice(3, 3, &entries) + Matrix::identity(3, 3) * 2.0;
        prop_assume!(a.determinant().abs() > 0.1);
        let i = Matrix::identity(3, 3);
        let z = Vector::zeros(3);
        let base = containment_lambda(&k, &d, &i, &z).unwrap();
        let moved = containment_lambda(&k.linear_image(&a).unwrap(), &d.linear_image(&a).unwrap(), &i, &z).unwrap();
        assert_relative_eq!(base, moved, max_relative = 1e-6);
        prop_assert!(base >= 1.0 - 1e-9);
    }

    #[test]
    fn mu_combine_minimizes(v in 1e-6f64..100.0, w in 1e-6f64..100.0, mu in 0.001f64..0.999) {
        let (mu0, theta) = mu_combine(v, w).unwrap();
        prop_assert!(mu0 > 0.0 && mu0 < 1.0);
        prop_assert!(theta <= v / mu + w / (1.0 - mu) + 1e-12 * theta);
    }
}

#[test]
fn estimates_are_deterministic() {
    let k = families::gaussian_polytope(5, 12, false, 3).unwrap();
    let cfg = SamplerConfig::new(17, 10_000);
    let a = measure::estimate_ell(&k, &cfg).unwrap();
    let b = measure::estimate_ell(&k, &cfg).unwrap();
    assert_eq!(a.mean.to_bits(), b.mean.to_bits());
    assert_eq!(a.stderr.to_bits(), b.stderr.to_bits());
    let c = measure::estimate_ell(&k, &cfg.derive(1)).unwrap();
    assert_ne!(a.mean.to_bits(), c.mean.to_bits());
}

#[test]
fn polar_ball_is_ball() {
    let b = ConvexBody::ball(4);
    let x = [0.3, -0.2, 0.9, 0.1];
    assert_relative_eq!(b.polar().unwrap().gauge(&x), b.gauge(&x), max_relative = 1e-12);
}
