use crate::body::{ConvexBody, Shape, Subspace};
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::positions;
use crate::sampling::{draw, pool, Distribution, SamplerConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

fn section_volume(k: &ConvexBody, f: &Subspace, x: &Vector) -> Result<f64> {
    match k.section_through(f, x)? {
        Some(s) => s.volume(),
        None => Ok(0.0),
    }
}

/// `(vol((K-K) ∩ F) / max_x vol(K ∩ (F + x)))^{1/m}` with the maximizing shift.
///
/// The maximum is searched over starting shifts (centroid, Santaló point, John
/// center, random convex combinations of vertices) followed by a pattern
/// search along `F⊥`, using at most `n_shifts` section volumes.
pub fn theorem3_ratio_scan(k: &ConvexBody, f: &Subspace, n_shifts: usize, cfg: &SamplerConfig) -> Result<(f64, Vector)> {
    let n = k.dim();
    if f.ambient_dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: f.ambient_dim() });
    }
    let m = f.dim();
    if m == 0 {
        return Err(Error::DegenerateSection);
    }
    let num = k.difference_body()?.section(f)?.volume()?;

    let mut starts: Vec<Vector> = Vec::new();
    if let Shape::Polytope(p) = k.shape() {
        let verts = p.vertices();
        starts.push(verts.iter().fold(Vector::zeros(n), |a, v| a + v) / verts.len() as f64);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        for _ in 0..(n_shifts / 4).min(32) {
            let w: Vec<f64> = (0..verts.len()).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
            let s: f64 = w.iter().sum();
            starts.push(verts.iter().zip(&w).fold(Vector::zeros(n), |a, (v, wi)| a + v * (wi / s)));
        }
    }
    starts.push(positions::centering_point(k)?);
    starts.push(positions::john_ellipsoid(k)?.center().clone());

    let mut evals = 0usize;
    let mut best: Option<(f64, Vector)> = None;
    for x in starts {
        let val = section_volume(k, f, &x)?;
        evals += 1;
        if best.as_ref().map_or(true, |b| val > b.0) {
            best = Some((val, x));
        }
    }
    let (mut best_val, mut best_x) = best.expect("at least two starts");

    let dirs = f.complement().vectors();
    let mut step = 0.25 * k.circumradius();
    let floor = 1e-6 * k.circumradius();
    while evals < n_shifts && step > floor && !dirs.is_empty() {
        let mut improved = false;
        for d in &dirs {
            for sgn in [1.0, -1.0] {
                if evals >= n_shifts {
                    break;
                }
                let x = &best_x + d * (sgn * step);
                let val = section_volume(k, f, &x)?;
                evals += 1;
                if val > best_val {
                    best_val = val;
                    best_x = x;
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    if !(best_val > 0.0) {
        return Err(Error::DegenerateSection);
    }
    Ok(((num / best_val).powf(1.0 / m as f64), best_x))
}

#[derive(Debug, Clone, Serialize)]
pub struct QsResult {
    pub e1: Subspace,
    /// Subspace of `E1`, in ambient coordinates.
    pub e2: Subspace,
    pub d_d: f64,
    /// `d_D` of every trial, by trial index.
    pub trials: Vec<f64>,
}

fn haar_subspace(ambient: usize, dim: usize, cfg: &SamplerConfig) -> Subspace {
    let g: Vec<Vector> = draw(ambient, Distribution::Gaussian, &cfg.with_samples(dim))
        .into_iter()
        .map(Vector::from_vec)
        .collect();
    Subspace::span(ambient, &g)
}

/// Random search over nested `E2 ⊂ E1` for a well-conditioned `P_{E2}(K ∩ E1)`.
pub fn qs_search(k: &ConvexBody, eps: f64, n_trials: usize, cfg: &SamplerConfig) -> Result<QsResult> {
    let n = k.dim();
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::NonPositive("eps (must lie in (0,1))"));
    }
    let k2 = ((1.0 - eps) * n as f64 - 1e-9).ceil() as usize;
    if k2 < 1 || k2 > n - 1 {
        return Err(Error::Unsupported(format!("target dimension {k2} outside 1..{}", n - 1)));
    }
    if n_trials == 0 {
        return Err(Error::NonPositive("number of trials"));
    }
    let k0 = if k.require_interior().is_ok() { k.clone() } else { k.shifted(&positions::centering_point(k)?)? };
    let run = |i: usize| -> Result<(f64, Subspace, Subspace)> {
        let k1 = k2 + i % (n - k2 + 1);
        let tcfg = cfg.derive(i as u64);
        let e1 = haar_subspace(n, k1, &tcfg.with_stream(1));
        let e2_local = haar_subspace(k1, k2, &tcfg.with_stream(2));
        let e2 = e2_local.lift(&e1);
        let d = k0.section(&e1)?.project(&e2_local)?;
        Ok((positions::dk_estimate(&d)?, e1, e2))
    };
    let results: Vec<Result<(f64, Subspace, Subspace)>> =
        pool().install(|| (0..n_trials).into_par_iter().map(run).collect());
    let mut trials = Vec::with_capacity(n_trials);
    let mut best: Option<(f64, Subspace, Subspace)> = None;
    for r in results {
        let (d, e1, e2) = r?;
        trials.push(d);
        if best.as_ref().map_or(true, |b| d < b.0) {
            best = Some((d, e1, e2));
        }
    }
    let (d_d, e1, e2) = best.expect("n_trials > 0");
    Ok(QsResult { e1, e2, d_d, trials })
}
