//! Acceptance criteria, one line per criterion:
//! `[ACCEPT NN] PASS|FAIL <name> (<seconds>s) <details>`.
//! Exits nonzero if any criterion fails.

use cpl_core::body::{ConvexBody, Subspace};
use cpl_core::constructions::{
    lemma2_construct, lemma4_shift, mu_combine, theorem1_pipeline, Budget, CertKind,
};
use cpl_core::distances::{bm_oracle, gluskin_sample, inclusion_factor, theorem5_bound};
use cpl_core::families::{self, CounterexamplePair, Family};
use cpl_core::harness::{self, RowKind, SuiteSpec};
use cpl_core::linalg::{Matrix, Vector};
use cpl_core::measure;
use cpl_core::sampling::SamplerConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};

const BAND: f64 = 3.0;

struct Outcome {
    passed: bool,
    details: String,
}

fn outcome(passed: bool, details: impl Into<String>) -> Outcome {
    Outcome { passed, details: details.into() }
}

fn binom(n: u64, k: u64) -> f64 {
    // exact in u128 for the sizes used here
    let mut r: u128 = 1;
    for i in 0..k as u128 {
        r = r * (n as u128 - i) / (i + 1);
    }
    r as f64
}

fn gaussian_vectors(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Vec<Vector> {
    (0..m)
        .map(|_| {
            Vector::from_fn(n, |_, _| {
                // Box–Muller, independent of the library sampler
                let u1: f64 = rng.random::<f64>().max(1e-300);
                let u2: f64 = rng.random();
                (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
            })
        })
        .collect()
}

fn random_subspace(n: usize, m: usize, rng: &mut ChaCha8Rng) -> Subspace {
    Subspace::span(n, &gaussian_vectors(n, m, rng))
}

fn c01_simplex_ball() -> Outcome {
    let mut ok = true;
    let mut d = Vec::new();
    for n in [2usize, 3] {
        let t = Instant::now();
        let r = bm_oracle(&families::simplex(n).unwrap(), &ConvexBody::ball(n), &SamplerConfig::new(11, 1)).unwrap();
        let nf = n as f64;
        let within = r.value >= 0.95 * nf && r.value <= 1.02 * nf && t.elapsed() < Duration::from_secs(120);
        ok &= within;
        d.push(format!("n={n}: d={:.6} in [{:.2},{:.2}] ({:.1}s)", r.value, 0.95 * nf, 1.02 * nf, t.elapsed().as_secs_f64()));
    }
    outcome(ok, d.join("; "))
}

fn c02_rogers_shephard() -> Outcome {
    let mut ok = true;
    let mut d = Vec::new();
    for n in 2..=5usize {
        let s = families::simplex(n).unwrap();
        let ratio = measure::exact_volume(&s.difference_body().unwrap()).unwrap() / measure::exact_volume(&s).unwrap();
        let target = binom(2 * n as u64, n as u64);
        let rel = (ratio - target).abs() / target;
        ok &= rel <= 1e-6;
        d.push(format!("n={n}: {ratio:.6}/{target} rel {rel:.1e}"));
    }
    outcome(ok, d.join("; "))
}

fn c03_counterexample() -> Outcome {
    let mut ok = true;
    let mut d = Vec::new();
    let cfg = SamplerConfig::new(3, 200_000);
    for n in 4..=10usize {
        let p = CounterexamplePair::new(n).unwrap();
        let nf = n as f64;
        let ratio = (p.b.volume().unwrap() / p.d.volume().unwrap()).powf(1.0 / (nf + 1.0));
        let vol_ok = (ratio - 2f64.powf(nf / (nf + 1.0))).abs() <= 1e-9;
        let mb = measure::estimate_m(&p.b, &cfg).unwrap();
        let md = measure::estimate_m(&p.d, &cfg).unwrap();
        let lower = (2.0 / std::f64::consts::PI).sqrt() * 2f64.powi(n as i32) / nf.sqrt();
        let mb_ok = mb.mean <= 1.0 + BAND * mb.stderr;
        let md_ok = md.mean >= lower - BAND * md.stderr;
        // Gaussian form (ℓ(D)/√n), reported alongside
        let ld = measure::estimate_ell(&p.d, &cfg).unwrap();
        ok &= vol_ok && mb_ok && md_ok;
        d.push(format!(
            "n={n}: vol {} M(B)={:.4} {} M(D)={:.3}±{:.3} vs {:.3} {} [ℓ(D)/√n={:.3}]",
            if vol_ok { "ok" } else { "FAIL" },
            mb.mean,
            if mb_ok { "ok" } else { "FAIL" },
            md.mean,
            md.stderr,
            lower,
            if md_ok { "ok" } else { "FAIL" },
            ld.mean / nf.sqrt()
        ));
    }
    outcome(ok, d.join("; "))
}

fn c04_mu_combine() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_id = 0.0f64;
    let mut grid_ok = true;
    for _ in 0..10_000 {
        let v = 100.0 * (1.0 - rng.random::<f64>());
        let w = 100.0 * (1.0 - rng.random::<f64>());
        let (mu0, _) = mu_combine(v, w).unwrap();
        let theta = |mu: f64| v / mu + w / (1.0 - mu);
        let t0 = theta(mu0);
        let target = (v.sqrt() + w.sqrt()).powi(2);
        worst_id = worst_id.max((t0 - target).abs() / target);
        for k in 1..1000 {
            if theta(k as f64 / 1000.0) < t0 * (1.0 - 1e-12) {
                grid_ok = false;
            }
        }
    }
    outcome(worst_id <= 1e-12 && grid_ok, format!("max rel |θ(μ0)-(√v+√w)²| = {worst_id:.2e}, grid minimum {}", if grid_ok { "ok" } else { "violated" }))
}

fn symmetric_pair(n: usize, rng: &mut ChaCha8Rng, seed: u64) -> (ConvexBody, ConvexBody) {
    let b = match rng.random_range(0..4) {
        0 => families::cube(n).unwrap(),
        1 => families::cross_polytope(n).unwrap(),
        2 => ConvexBody::ball(n),
        _ => gluskin_sample(n, 2 * n, true, seed).unwrap(),
    };
    let d0 = if rng.random::<bool>() {
        let g = Matrix::from_fn(n, n, |_, _| rng.random::<f64>() - 0.5) + Matrix::identity(n, n) * 0.3;
        ConvexBody::ellipsoid(Vector::zeros(n), &g * g.transpose() + Matrix::identity(n, n) * 1e-3).unwrap()
    } else {
        gluskin_sample(n, n + 2, true, seed ^ 0xd).unwrap()
    };
    let s = 0.9 / inclusion_factor(&d0, &b).unwrap();
    (d0.scaled(s).unwrap(), b)
}

fn c05_lemma2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut fails = 0;
    let mut worst = f64::NEG_INFINITY;
    for trial in 0..100u64 {
        let n = 3 + (trial as usize % 6);
        let (d, b) = symmetric_pair(n, &mut rng, 500 + trial);
        let a = 0.2 + 0.3 * rng.random::<f64>();
        let r = lemma2_construct(&d, &b, a, &SamplerConfig::new(trial, 4000), &Budget::light()).unwrap();
        let m = n as f64;
        let k_need = (a * m - 1e-9).ceil() as usize;
        let u = r.subspace.basis();
        let norm_on_e = (&r.t * u).singular_values().max();
        let det = r.t.determinant();
        let bound = det.powf(1.0 / ((1.0 - a) * m));
        worst = worst.max(norm_on_e - bound);
        if r.subspace.dim() < k_need || norm_on_e > bound + 1e-10 {
            fails += 1;
        }
    }
    outcome(fails == 0, format!("{} / 100 pairs pass; max ‖T|E‖ - det^(1/((1-a)m)) = {worst:.3e}", 100 - fails))
}

fn c06_lemma4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let fams = [Family::Simplex, Family::RegularSimplex, Family::Cube, Family::CrossPolytope, Family::RandomGaussianPolytope];
    let mut pass = 0;
    let mut worst = 0.0f64;
    for trial in 0..100u64 {
        let n = 3 + (trial as usize % 6);
        let fam = fams[(trial as usize / 6) % fams.len()];
        let k = fam.build(n, trial).unwrap();
        let m = rng.random_range(1..n);
        let f = random_subspace(n, m, &mut rng);
        let r = match lemma4_shift(&k, &f, &SamplerConfig::new(trial, 4000)) {
            Ok(r) => r,
            Err(e) => {
                println!("  chord battery trial {trial} ({} n={n} m={m}): {e}", fam.name());
                continue;
            }
        };
        let c = 2.0 * (m * m) as f64;
        let band = BAND * (r.ell_section.stderr.powi(2) + (c * r.ell_diff_section.stderr).powi(2)).sqrt();
        worst = worst.max(r.ell_section.mean / (c * r.ell_diff_section.mean));
        if r.ell_section.mean <= c * r.ell_diff_section.mean + band {
            pass += 1;
        }
    }
    outcome(pass == 100, format!("{pass}/100 trials; max ℓ(K_u∩F)/(2m²ℓ((K-K)∩F)) = {worst:.4}"))
}

fn suite(families: &[&str], dims: std::ops::RangeInclusive<usize>, seeds: &[u64], checks: &[&str], samples: usize) -> Vec<harness::Row> {
    let spec = SuiteSpec {
        families: families.iter().map(|s| s.to_string()).collect(),
        dims: dims.collect(),
        seeds: seeds.to_vec(),
        checks: checks.iter().map(|s| s.to_string()).collect(),
        samples,
    };
    harness::verify(&spec).unwrap()
}

const BATTERY: [&str; 7] = ["simplex", "regular-simplex", "cube", "cross-polytope", "ball", "random-gaussian-polytope", "gluskin"];

fn c07_sandwich() -> Outcome {
    let rows = suite(&BATTERY, 2..=8, &[1, 2], &["sandwich"], 20_000);
    let bad: Vec<_> = rows.iter().filter(|r| r.kind != RowKind::Skipped && !r.passed).collect();
    let n = rows.iter().filter(|r| r.kind != RowKind::Skipped).count();
    outcome(bad.is_empty(), format!("{}/{} rows pass{}", n - bad.len(), n, bad.first().map(|r| format!("; first failure {} {} n={}", r.check, r.family, r.dim)).unwrap_or_default()))
}

fn c08_theorem1() -> Outcome {
    let mut ok = true;
    let mut d = Vec::new();
    let cfg = SamplerConfig::new(8, 20_000);
    for fam in [Family::Simplex, Family::Cube] {
        for n in 5..=8usize {
            let k = fam.build(n, 0).unwrap();
            let r = match theorem1_pipeline(&k, &[0.5, 0.25], &cfg, &Budget::light()) {
                Ok(r) => r,
                Err(e) => {
                    ok = false;
                    d.push(format!("{} n={n}: error {e}", fam.name()));
                    continue;
                }
            };
            let k1 = k.affine_image(&r.position).unwrap();
            let ms = measure::estimate_mstar(&k1, &SamplerConfig::new(88, 100_000)).unwrap();
            let ms_ok = ms.mean <= 1.0 + BAND * ms.stderr;
            let dims_ok = r.subspaces.iter().zip([0.5, 0.25]).all(|((_, e), eps)| e.dim() as f64 >= (1.0 - eps) * n as f64 - 1.0);
            let rec_ok = r.rounds.iter().all(|rd| {
                let cert = rd.certified.iter().find(|c| c.name == "claim_recursion").map(|c| c.passed).unwrap_or(false);
                cert && rd.phi.sqrt() <= (rd.v.sqrt() + rd.w.sqrt()) * (1.0 + 1e-9)
            });
            let structural = r.ledger.all_passed(&[CertKind::Structural]);
            ok &= ms_ok && dims_ok && rec_ok && structural;
            d.push(format!(
                "{} n={n}: M*={:.3} dims {:?} rounds {} {}",
                fam.name(),
                ms.mean,
                r.subspaces.iter().map(|(_, e)| e.dim()).collect::<Vec<_>>(),
                r.rounds.len(),
                if ms_ok && dims_ok && rec_ok && structural { "ok" } else { "FAIL" }
            ));
        }
    }
    outcome(ok, d.join("; "))
}

fn c09_theorem5() -> Outcome {
    let mut ok = true;
    let mut d = Vec::new();
    let cfg = SamplerConfig::new(9, 20_000);
    for n in 5..=7usize {
        let r = theorem5_bound(&families::simplex(n).unwrap(), &families::cube(n).unwrap(), &cfg, &Budget::light()).unwrap();
        let displays = r.ledger.certified.iter().filter(|c| c.name.contains("display"));
        let (mut total, mut passed) = (0, 0);
        for c in displays {
            total += 1;
            passed += c.passed as usize;
        }
        let eight = ["norm_K_polar", "ell_D", "norm_D", "ell_K_polar", "norm_D_polar", "ell_K", "norm_K", "ell_D_polar"]
            .iter()
            .all(|k| r.ingredient(k).is_some_and(f64::is_finite));
        let good = total == 8 && passed == 8 && eight && r.value.is_finite();
        ok &= good;
        d.push(format!("n={n}: displays {passed}/{total} bound {:.2}", r.value));
    }
    for n in 2..=3usize {
        let (s, c) = (families::simplex(n).unwrap(), families::cube(n).unwrap());
        let t5 = theorem5_bound(&s, &c, &cfg, &Budget::light()).unwrap();
        let or = bm_oracle(&s, &c, &cfg).unwrap();
        ok &= t5.value > or.value;
        d.push(format!("n={n}: bound {:.3} > oracle {:.3}", t5.value, or.value));
    }
    outcome(ok, d.join("; "))
}

fn c10_estimators() -> Outcome {
    let mut ok = true;
    let mut d = Vec::new();
    for n in [2usize, 5, 10, 20] {
        let cfg = SamplerConfig::new(10, 100_000);
        let b = ConvexBody::ball(n);
        let m = measure::estimate_m(&b, &cfg).unwrap();
        let l = measure::estimate_ell(&b, &cfg).unwrap();
        let nf = n as f64;
        let chi = 2f64.sqrt() * (statrs::function::gamma::ln_gamma((nf + 1.0) / 2.0) - statrs::function::gamma::ln_gamma(nf / 2.0)).exp();
        let m_ok = (m.mean - 1.0).abs() <= 1e-12;
        let l_ok = (l.mean - chi).abs() <= BAND * l.stderr;
        ok &= m_ok && l_ok;
        d.push(format!("n={n}: |M-1|={:.1e} ℓ={:.5} vs {:.5}", (m.mean - 1.0).abs(), l.mean, chi));
    }
    let rows = || harness::to_csv(&suite(&["simplex", "cube", "gluskin"], 2..=4, &[1, 2], &["sandwich", "urysohn", "dk_bound"], 5000));
    let same = rows() == rows();
    ok &= same;
    d.push(format!("repeat CSV bit-identical: {same}"));
    outcome(ok, d.join("; "))
}

fn c11_lemma1_john_urysohn() -> Outcome {
    let rows = suite(&BATTERY, 2..=8, &[1], &["lemma1_ratio", "dk_bound", "urysohn"], 20_000);
    let active: Vec<_> = rows.iter().filter(|r| r.kind != RowKind::Skipped).collect();
    let bad: Vec<_> = active.iter().filter(|r| !r.passed).collect();
    let lemma1_max = active.iter().filter(|r| r.check == "lemma1_ratio.ratio").map(|r| r.value).fold(0.0, f64::max);
    outcome(
        bad.is_empty(),
        format!(
            "{}/{} rows pass; max hull/intersection ratio {lemma1_max:.4}{}",
            active.len() - bad.len(),
            active.len(),
            bad.first().map(|r| format!("; first failure {} {} n={} {:.4}>{:.4}", r.check, r.family, r.dim, r.value, r.bound)).unwrap_or_default()
        ),
    )
}

fn c12_gluskin() -> Outcome {
    let mut ok = true;
    let mut d = Vec::new();
    for n in 4..=8usize {
        let mut hits = 0;
        for t in 0..100u64 {
            let k = gluskin_sample(n, 4 * n, false, 12_000 + 100 * n as u64 + t).unwrap();
            // distance from the origin to the nearest facet hyperplane
            let p = k.as_polytope().unwrap();
            let r = p.normals().iter().zip(p.offsets()).map(|(a, b)| b / a.norm()).fold(f64::INFINITY, f64::min);
            if r >= 0.2 / (n as f64).sqrt() {
                hits += 1;
            }
        }
        ok &= hits >= 95;
        d.push(format!("n={n}: {hits}/100"));
    }
    outcome(ok, d.join("; "))
}

fn main() {
    // keep `cargo test -- <filter>` style arguments harmless
    let filters: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let criteria: [(&str, &str, fn() -> Outcome, u64); 12] = [
        ("01", "simplex-ball distance", c01_simplex_ball, 240),
        ("02", "Rogers-Shephard equality", c02_rogers_shephard, 30),
        ("03", "cylinder counterexample table", c03_counterexample, 60),
        ("04", "mu combination identity", c04_mu_combine, 1),
        ("05", "eigen-subspace certificate", c05_lemma2, 120),
        ("06", "chord-midpoint shift battery", c06_lemma4, 300),
        ("07", "sandwich inequalities", c07_sandwich, 300),
        ("08", "theorem1 pipeline structural pass", c08_theorem1, 600),
        ("09", "theorem5 display certificates", c09_theorem5, 600),
        ("10", "estimator calibration", c10_estimators, 60),
        ("11", "hull ratio / John / Urysohn battery", c11_lemma1_john_urysohn, 300),
        ("12", "Gluskin inradius", c12_gluskin, 180),
    ];
    let mut failed = Vec::new();
    for (id, name, f, limit) in criteria {
        if !filters.is_empty() && !filters.iter().any(|f| name.contains(f.as_str()) || f == id) {
            continue;
        }
        let t = Instant::now();
        let o = std::panic::catch_unwind(f).unwrap_or_else(|_| outcome(false, "panicked"));
        let secs = t.elapsed().as_secs_f64();
        let in_time = secs <= limit as f64;
        let passed = o.passed && in_time;
        println!(
            "[ACCEPT {id}] {} {name} ({secs:.1}s, limit {limit}s{}) {}",
            if passed { "PASS" } else { "FAIL" },
            if in_time { "" } else { ", over time" },
            o.details
        );
        if !passed {
            failed.push(id);
        }
    }
    if !failed.is_empty() {
        println!("acceptance: {} failed: {}", failed.len(), failed.join(", "));
        std::process::exit(1);
    }
    println!("acceptance: all criteria passed");
}

