//! Sweeps that produced the frozen regression bounds in `constants.rs`.
//! Each prints the measured maximum next to the frozen value and fails if
//! the frozen value no longer covers it.

use cpl_core::body::Subspace;
use cpl_core::constants::{GLUSKIN_C, GLUSKIN_PASS_RATE, LEMMA1_RATIO_MAX, THEOREM3_C};
use cpl_core::constructions::theorem3_ratio_scan;
use cpl_core::families::Family;
use cpl_core::harness::gluskin_inradius_rate;
use cpl_core::linalg::Vector;
use cpl_core::positions;
use cpl_core::sampling::SamplerConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const POLYTOPES: [Family; 5] = [Family::Simplex, Family::RegularSimplex, Family::Cube, Family::CrossPolytope, Family::RandomGaussianPolytope];

#[test]
fn hull_over_intersection_ratio() {
    let mut worst = 0.0f64;
    for fam in POLYTOPES {
        for n in 2..=6 {
            let k = fam.build(n, 1).unwrap();
            let k0 = k.shifted(&positions::santalo_point(&k).unwrap()).unwrap();
            let r = (k0.conv_union_reflection().unwrap().volume().unwrap() / k0.central_intersection().unwrap().volume().unwrap())
                .powf(1.0 / n as f64);
            worst = worst.max(r);
        }
    }
    println!("hull/intersection ratio: measured max {worst:.4}, frozen {LEMMA1_RATIO_MAX}");
    assert!(worst <= LEMMA1_RATIO_MAX);
}

#[test]
fn section_ratio_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for fam in [Family::Simplex, Family::Cube, Family::RandomGaussianPolytope] {
        for n in 2..=5 {
            let k = fam.build(n, 2).unwrap();
            let m = (n / 2).max(1);
            let basis: Vec<Vector> = (0..m).map(|_| Vector::from_fn(n, |_, _| rng.random::<f64>() - 0.5)).collect();
            let f = Subspace::span(n, &basis);
            let (ratio, _) = theorem3_ratio_scan(&k, &f, 30, &SamplerConfig::new(5, 2000)).unwrap();
            let (mf, nf) = (m as f64, n as f64);
            worst = worst.max(ratio / (nf / mf).min(mf.sqrt()));
        }
    }
    println!("section ratio / phi(m,n): measured max {worst:.4}, frozen {THEOREM3_C}");
    assert!(worst <= THEOREM3_C);
}

#[test]
fn gluskin_inradius_constant() {
    let mut worst = 1.0f64;
    for n in 4..=8 {
        let r = gluskin_inradius_rate(n, GLUSKIN_C, 100, 7).unwrap();
        worst = worst.min(r);
    }
    println!("gluskin pass rate at c = {GLUSKIN_C}: measured min {worst:.2}, frozen {GLUSKIN_PASS_RATE}");
    assert!(worst >= GLUSKIN_PASS_RATE);
}
