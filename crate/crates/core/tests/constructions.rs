use cpl_core::body::{ConvexBody, Subspace};
use cpl_core::constructions::{qs_search, stage1_embed, theorem2_pipeline, theorem3_ratio_scan, Budget, CertKind};
use cpl_core::families;
use cpl_core::linalg::Vector;
use cpl_core::measure;
use cpl_core::sampling::SamplerConfig;

fn span(n: usize, vs: &[&[f64]]) -> Subspace {
    Subspace::span(n, &vs.iter().map(|v| Vector::from_column_slice(v)).collect::<Vec<_>>())
}

#[test]
fn section_ratio_of_segments_is_two() {
    // in one dimension (K-K)∩F is twice the longest chord
    let tri = families::simplex(2).unwrap();
    let f = span(2, &[&[1.0, 0.3]]);
    let (ratio, _) = theorem3_ratio_scan(&tri, &f, 60, &SamplerConfig::new(1, 1000)).unwrap();
    assert!((ratio - 2.0).abs() < 1e-3, "{ratio}");
}

#[test]
fn section_ratio_of_symmetric_bodies_is_two() {
    // the central section is the largest one, and (K-K)∩F = 2(K∩F)
    let cube = families::cube(3).unwrap();
    let f = span(3, &[&[1.0, 0.2, 0.0], &[0.0, 0.5, 1.0]]);
    let (ratio, _) = theorem3_ratio_scan(&cube, &f, 40, &SamplerConfig::new(2, 1000)).unwrap();
    assert!((ratio - 2.0).abs() < 1e-6, "{ratio}");
}

#[test]
fn section_ratio_is_at_least_two() {
    // Brunn-Minkowski: vol(S - S) >= 2^m vol(S) for every section S
    let k = families::simplex(4).unwrap();
    let f = span(4, &[&[1.0, -1.0, 0.0, 0.3], &[0.2, 0.1, 1.0, -0.4]]);
    let (ratio, _) = theorem3_ratio_scan(&k, &f, 40, &SamplerConfig::new(3, 1000)).unwrap();
    assert!(ratio >= 2.0 - 1e-9, "{ratio}");
}

#[test]
fn quotients_of_the_ball_are_balls() {
    let r = qs_search(&ConvexBody::ball(5), 1.0 / 3.0, 4, &SamplerConfig::new(4, 1000)).unwrap();
    assert!(r.e2.dim() <= r.e1.dim());
    assert!((r.d_d - 1.0).abs() < 1e-6, "{}", r.d_d);
}

#[test]
fn quotient_distance_within_john_bound() {
    let k = families::simplex(5).unwrap();
    let r = qs_search(&k, 1.0 / 3.0, 6, &SamplerConfig::new(5, 1000)).unwrap();
    assert_eq!(r.trials.len(), 6);
    assert!(r.trials.iter().all(|&d| d >= 1.0 - 1e-9 && d <= r.e2.dim() as f64 + 1e-6));
    assert_eq!(r.d_d, r.trials.iter().copied().fold(f64::INFINITY, f64::min));
}

#[test]
fn stage1_embedding_certificates() {
    let k = families::simplex(4).unwrap();
    let cfg = SamplerConfig::new(6, 20_000);
    let s = stage1_embed(&k, &cfg, &Budget::light()).unwrap();
    assert!(s.ledger.all_passed(&[CertKind::Structural]));
    let ms = measure::estimate_mstar(&s.body, &SamplerConfig::new(60, 50_000)).unwrap();
    assert!(ms.mean <= 1.0 + 3.0 * ms.stderr, "{ms:?}");
}

#[test]
fn theorem2_on_the_cube() {
    let k = families::cube(5).unwrap();
    let r = theorem2_pipeline(&k, &SamplerConfig::new(7, 20_000), &Budget::light()).unwrap();
    assert!(r.ledger.all_passed(&[CertKind::Structural]));
    let (_, f) = &r.subspaces[0];
    assert_eq!(f.dim() + r.subspace_e.dim(), 5);
    assert!(r.ledger.measured.iter().any(|(name, v)| name == "final.product" && v.is_finite()));
}
