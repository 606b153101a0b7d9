//! Standard test bodies.

use crate::body::ConvexBody;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::sampling::{draw, Distribution, SamplerConfig};
use serde::Serialize;

fn unit(n: usize, i: usize) -> Vector {
    let mut v = Vector::zeros(n);
    v[i] = 1.0;
    v
}

/// `conv{0, e_1, ..., e_n}`.
pub fn simplex(n: usize) -> Result<ConvexBody> {
    let mut pts = vec![Vector::zeros(n)];
    pts.extend((0..n).map(|i| unit(n, i)));
    ConvexBody::from_vertices(&pts)
}

/// Regular simplex with centroid 0 and circumradius 1.
pub fn regular_simplex(n: usize) -> Result<ConvexBody> {
    // centered standard basis of R^{n+1}, expressed in an orthonormal basis of 1⊥
    let m = n + 1;
    let c = 1.0 / m as f64;
    let pts: Vec<Vector> = (0..m).map(|i| unit(m, i).add_scalar(-c)).collect();
    let mut q = Matrix::zeros(m, n);
    for j in 0..n {
        // Helmert basis
        let jf = (j + 1) as f64;
        let s = 1.0 / (jf * (jf + 1.0)).sqrt();
        for i in 0..=j {
            q[(i, j)] = s;
        }
        q[(j + 1, j)] = -jf * s;
    }
    let r = (1.0 - c).sqrt();
    let verts: Vec<Vector> = pts.iter().map(|p| q.transpose() * p / r).collect();
    ConvexBody::from_vertices(&verts)
}

/// `[-1, 1]^n`.
pub fn cube(n: usize) -> Result<ConvexBody> {
    let normals: Vec<Vector> = (0..n).flat_map(|i| [unit(n, i), -unit(n, i)]).collect();
    ConvexBody::from_halfspaces(&normals, &vec![1.0; 2 * n])
}

/// `conv{±e_i}`.
pub fn cross_polytope(n: usize) -> Result<ConvexBody> {
    let pts: Vec<Vector> = (0..n).flat_map(|i| [unit(n, i), -unit(n, i)]).collect();
    ConvexBody::from_vertices(&pts)
}

/// Hull of `m` Gaussian points (and their negatives when `symmetric`), resampled
/// until 0 is an interior point; `DegenerateBody` after 100 attempts.
pub fn gaussian_polytope(n: usize, m: usize, symmetric: bool, seed: u64) -> Result<ConvexBody> {
    let need = if symmetric { n } else { n + 1 };
    if m < need {
        return Err(Error::DegenerateBody(format!("{m} points cannot span a body in R^{n}")));
    }
    let base = SamplerConfig::new(seed, m);
    for attempt in 0..100 {
        let mut pts: Vec<Vector> = draw(n, Distribution::Gaussian, &base.derive(attempt))
            .into_iter()
            .map(Vector::from_vec)
            .collect();
        if symmetric {
            let neg: Vec<Vector> = pts.iter().map(|p| -p).collect();
            pts.extend(neg);
        }
        if let Ok(k) = ConvexBody::from_vertices(&pts) {
            if k.interior_margin() > 1e-9 {
                return Ok(k);
            }
        }
    }
    Err(Error::DegenerateBody("no full-dimensional sample with 0 inside after 100 attempts".into()))
}

/// `B = B_2^n x [-1, 1]` and `D = B_2^n x [-2^{-n}, 2^{-n}]` in `R^{n+1}`.
#[derive(Debug, Clone)]
pub struct CounterexamplePair {
    pub n: usize,
    pub b: ConvexBody,
    pub d: ConvexBody,
}

impl CounterexamplePair {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::NonPositive("ball dimension"));
        }
        Ok(Self { n, b: ConvexBody::cylinder(n, 1.0)?, d: ConvexBody::cylinder(n, 0.5f64.powi(n as i32))? })
    }
}

/// Named generator used by suites and the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Simplex,
    RegularSimplex,
    Cube,
    CrossPolytope,
    Ball,
    RandomGaussianPolytope,
    Gluskin,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::Simplex,
        Family::RegularSimplex,
        Family::Cube,
        Family::CrossPolytope,
        Family::Ball,
        Family::RandomGaussianPolytope,
        Family::Gluskin,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Family::Simplex => "simplex",
            Family::RegularSimplex => "regular-simplex",
            Family::Cube => "cube",
            Family::CrossPolytope => "cross-polytope",
            Family::Ball => "ball",
            Family::RandomGaussianPolytope => "random-gaussian-polytope",
            Family::Gluskin => "gluskin",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown family `{s}`")))
    }

    /// Largest dimension the exact polytope machinery is used at.
    pub fn max_dim(self) -> usize {
        match self {
            Family::Ball => 64,
            Family::CrossPolytope | Family::Cube => 10,
            _ => 9,
        }
    }

    pub fn build(self, n: usize, seed: u64) -> Result<ConvexBody> {
        if n < 1 || n > self.max_dim() {
            return Err(Error::Unsupported(format!("{} in dimension {n}", self.name())));
        }
        match self {
            Family::Simplex => simplex(n),
            Family::RegularSimplex => regular_simplex(n),
            Family::Cube => cube(n),
            Family::CrossPolytope => cross_polytope(n),
            Family::Ball => Ok(ConvexBody::ball(n)),
            Family::RandomGaussianPolytope => gaussian_polytope(n, 2 * n + 2, false, seed),
            Family::Gluskin => gaussian_polytope(n, 2 * n, true, seed),
        }
    }
}
