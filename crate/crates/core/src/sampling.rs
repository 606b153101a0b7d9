//! Deterministic, chunked Monte Carlo sampling.
//!
//! Every chunk of `CHUNK` samples draws from its own ChaCha8 stream keyed by
//! `(seed, stream_id, chunk index)`; chunk statistics are merged in chunk
//! order, so results do not depend on the number of threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

pub const CHUNK: usize = 4096;
pub const DEFAULT_SAMPLES: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub seed: u64,
    pub n_samples: usize,
    pub stream_id: u64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self { seed: 0, n_samples: DEFAULT_SAMPLES, stream_id: 0 }
    }
}

impl SamplerConfig {
    pub fn new(seed: u64, n_samples: usize) -> Self {
        Self { seed, n_samples: n_samples.max(1), stream_id: 0 }
    }

    pub fn with_stream(self, stream_id: u64) -> Self {
        Self { stream_id, ..self }
    }

    /// A config for an independent sub-task (fresh randomness).
    pub fn derive(self, tag: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x9e37_79b9_7f4a_7c15);
        rng.set_stream(self.stream_id.wrapping_mul(0x100_0001).wrapping_add(tag));
        Self { seed: rng.random(), ..self }
    }

    pub fn with_samples(self, n_samples: usize) -> Self {
        Self { n_samples: n_samples.max(1), ..self }
    }

    fn chunk_rng(&self, chunk: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((self.stream_id << 40) ^ chunk);
        rng
    }
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    #[serde(rename = "n")]
    pub n_samples: usize,
    pub seed: u64,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Self { mean: value, stderr: 0.0, n_samples: 1, seed: 0 }
    }
    pub fn upper(&self, k: f64) -> f64 {
        self.mean + k * self.stderr
    }
    pub fn lower(&self, k: f64) -> f64 {
        self.mean - k * self.stderr
    }
    pub fn scaled(&self, t: f64) -> Self {
        Self { mean: self.mean * t, stderr: self.stderr * t.abs(), ..*self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distribution {
    /// Standard Gaussian in `R^n`.
    Gaussian,
    /// Uniform on the unit sphere.
    Sphere,
    /// Uniform in the unit ball.
    Ball,
    /// Uniform in `[-1, 1]^n`.
    Cube,
}

/// Box–Muller pair generator.
pub struct Normal {
    spare: Option<f64>,
}

impl Normal {
    pub fn new() -> Self {
        Self { spare: None }
    }

    pub fn sample<R: Rng>(&mut self, rng: &mut R) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1: f64 = 1.0 - rng.random::<f64>(); // (0, 1]
        let u2: f64 = rng.random();
        let r = (-2.0 * u1.ln()).sqrt();
        let (s, c) = (std::f64::consts::TAU * u2).sin_cos();
        self.spare = Some(r * s);
        r * c
    }
}

impl Default for Normal {
    fn default() -> Self {
        Self::new()
    }
}

pub fn fill<R: Rng>(dist: Distribution, rng: &mut R, normal: &mut Normal, out: &mut [f64]) {
    match dist {
        Distribution::Cube => out.iter_mut().for_each(|x| *x = 2.0 * rng.random::<f64>() - 1.0),
        _ => {
            let mut nrm = 0.0;
            while nrm == 0.0 {
                for x in out.iter_mut() {
                    *x = normal.sample(rng);
                }
                nrm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
                if dist == Distribution::Gaussian {
                    return;
                }
            }
            let mut r = 1.0 / nrm;
            if dist == Distribution::Ball {
                r *= rng.random::<f64>().powf(1.0 / out.len() as f64);
            }
            out.iter_mut().for_each(|x| *x *= r);
        }
    }
}

/// Thread pool honoring `CPL_THREADS`.
pub fn pool() -> &'static rayon::ThreadPool {
    static POOL: OnceLock<rayon::ThreadPool> = OnceLock::new();
    POOL.get_or_init(|| {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(k) = std::env::var("CPL_THREADS").ok().and_then(|s| s.parse::<usize>().ok()) {
            b = b.num_threads(k.max(1));
        }
        b.build().expect("thread pool")
    })
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0.0 {
            return o;
        }
        if o.n == 0.0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments { n, mean: self.mean + d * o.n / n, m2: self.m2 + o.m2 + d * d * self.n * o.n / n }
    }

    fn estimate(&self, seed: u64) -> Estimate {
        let var = if self.n > 1.0 { self.m2 / (self.n - 1.0) } else { 0.0 };
        Estimate { mean: self.mean, stderr: (var / self.n).sqrt(), n_samples: self.n as usize, seed }
    }
}

/// Means of `k` functionals evaluated on the same samples. `f(x, out)` writes
/// the `k` values for the sample `x`.
pub fn estimate_many<F>(dim: usize, dist: Distribution, cfg: &SamplerConfig, k: usize, f: F) -> Vec<Estimate>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    let n = cfg.n_samples.max(1);
    let chunks = n.div_ceil(CHUNK);
    let per_chunk: Vec<Vec<Moments>> = pool().install(|| {
        (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut rng = cfg.chunk_rng(c as u64);
                let mut normal = Normal::new();
                let mut x = vec![0.0; dim];
                let mut vals = vec![0.0; k];
                let mut m = vec![Moments::default(); k];
                let len = CHUNK.min(n - c * CHUNK);
                for _ in 0..len {
                    fill(dist, &mut rng, &mut normal, &mut x);
                    f(&x, &mut vals);
                    for (mi, &v) in m.iter_mut().zip(&vals) {
                        mi.push(v);
                    }
                }
                m
            })
            .collect()
    });
    (0..k)
        .map(|j| per_chunk.iter().fold(Moments::default(), |acc, m| acc.merge(m[j])).estimate(cfg.seed))
        .collect()
}

/// Mean of one functional over the sampling distribution.
pub fn estimate_mean<F>(dim: usize, dist: Distribution, cfg: &SamplerConfig, f: F) -> Estimate
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    estimate_many(dim, dist, cfg, 1, |x, out| out[0] = f(x))[0]
}

/// Collects the raw samples (useful for ray checks and tests).
pub fn draw(dim: usize, dist: Distribution, cfg: &SamplerConfig) -> Vec<Vec<f64>> {
    let n = cfg.n_samples.max(1);
    let mut out = Vec::with_capacity(n);
    for c in 0..n.div_ceil(CHUNK) {
        let mut rng = cfg.chunk_rng(c as u64);
        let mut normal = Normal::new();
        for _ in 0..CHUNK.min(n - c * CHUNK) {
            let mut x = vec![0.0; dim];
            fill(dist, &mut rng, &mut normal, &mut x);
            out.push(x);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_moments() {
        let cfg = SamplerConfig::new(7, 100_000);
        let e = estimate_many(3, Distribution::Gaussian, &cfg, 2, |x, o| {
            o[0] = x[0];
            o[1] = x[1] * x[1];
        });
        assert!(e[0].mean.abs() < 4.0 * e[0].stderr);
        assert!((e[1].mean - 1.0).abs() < 4.0 * e[1].stderr);
    }

    #[test]
    fn sphere_and_ball_radii() {
        let cfg = SamplerConfig::new(1, 20_000);
        let e = estimate_mean(4, Distribution::Sphere, &cfg, |x| x.iter().map(|v| v * v).sum::<f64>().sqrt());
        assert!((e.mean - 1.0).abs() < 1e-12);
        // E|x| for the uniform ball is n/(n+1)
        let e = estimate_mean(4, Distribution::Ball, &cfg, |x| x.iter().map(|v| v * v).sum::<f64>().sqrt());
        assert!((e.mean - 0.8).abs() < 4.0 * e.stderr);
    }

    #[test]
    fn draw_matches_estimator_order() {
        let cfg = SamplerConfig::new(3, 9000);
        let pts = draw(2, Distribution::Gaussian, &cfg);
        let direct = pts.iter().map(|p| p[0]).sum::<f64>() / pts.len() as f64;
        let e = estimate_mean(2, Distribution::Gaussian, &cfg, |x| x[0]);
        assert!((direct - e.mean).abs() < 1e-12);
    }
}
