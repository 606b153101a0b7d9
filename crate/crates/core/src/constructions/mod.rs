//! Constructive versions of the section/shift lemmas, the iteration and the
//! embedding pipelines.

mod lemmas;
mod proposition;
mod search;
mod theorems;

pub use lemmas::{lemma2_construct, lemma3_construct, lemma4_shift, mu_combine, Lemma2, Lemma3, Lemma4};
pub use proposition::{proposition_iterate, IterationState, Round};
pub use search::{qs_search, theorem3_ratio_scan, QsResult};
pub use theorems::{stage1_embed, theorem1_pipeline, theorem2_pipeline, Stage1};

use crate::body::{AffinePosition, ConvexBody, Shape, Subspace};
use crate::constants::EXACT_SLACK;
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::measure;
use crate::positions::MmstarOptions;
use crate::sampling::{draw, Distribution, Estimate, SamplerConfig};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CertKind {
    /// Exact or common-random-number inequality; failure aborts a run.
    Structural,
    /// Monte Carlo inequality checked within the `MC_BAND` band.
    Statistical,
    /// Frozen empirical constant; reported, fails only under `--strict`.
    Regression,
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub kind: CertKind,
    pub passed: bool,
}

impl Certificate {
    pub fn new(name: impl Into<String>, value: f64, bound: f64, kind: CertKind) -> Self {
        // rounding slack; a statistical band can be zero for exact estimates
        let slack = EXACT_SLACK * bound.abs().max(value.abs()).max(1e-300);
        Self { name: name.into(), value, bound, kind, passed: value <= bound + slack }
    }

    /// `Err(CertificateFailed)` for a failed structural certificate.
    pub fn enforce(self) -> Result<Self> {
        if self.kind == CertKind::Structural && !self.passed {
            return Err(Error::CertificateFailed { name: self.name, value: self.value, bound: self.bound });
        }
        Ok(self)
    }
}

/// Ordered list of certificates and measured values.
#[derive(Debug, Clone, Default, Serialize)]
pub struct Ledger {
    pub certified: Vec<Certificate>,
    pub measured: Vec<(String, f64)>,
    pub flags: Vec<String>,
}

impl Ledger {
    pub fn check(&mut self, name: impl Into<String>, value: f64, bound: f64, kind: CertKind) -> Result<bool> {
        let c = Certificate::new(name, value, bound, kind).enforce()?;
        let ok = c.passed;
        self.certified.push(c);
        Ok(ok)
    }

    pub fn measure(&mut self, name: impl Into<String>, value: f64) {
        self.measured.push((name.into(), value));
    }

    pub fn flag(&mut self, note: impl Into<String>) {
        self.flags.push(note.into());
    }

    pub fn extend_prefixed(&mut self, prefix: &str, other: Ledger) {
        for mut c in other.certified {
            c.name = format!("{prefix}{}", c.name);
            self.certified.push(c);
        }
        for (k, v) in other.measured {
            self.measured.push((format!("{prefix}{k}"), v));
        }
        for f in other.flags {
            self.flags.push(format!("{prefix}{f}"));
        }
    }

    pub fn all_passed(&self, kinds: &[CertKind]) -> bool {
        self.certified.iter().filter(|c| kinds.contains(&c.kind)).all(|c| c.passed)
    }

    pub fn first_failure(&self, kinds: &[CertKind]) -> Option<&Certificate> {
        self.certified.iter().find(|c| kinds.contains(&c.kind) && !c.passed)
    }
}

/// Output of the embedding pipelines.
#[derive(Debug, Clone, Serialize)]
pub struct EmbeddingReport {
    pub pipeline: String,
    /// Maps the input body to the embedded one.
    pub position: AffinePosition,
    #[serde(with = "crate::linalg::serde_vec")]
    pub shift_u: Vector,
    pub subspace_e: Subspace,
    /// Extra labelled subspaces (one per scale for the multi-scale pipeline).
    pub subspaces: Vec<(String, Subspace)>,
    pub rounds: Vec<Round>,
    pub ledger: Ledger,
    pub seed: u64,
}

/// Sample counts and optimizer budgets shared by the constructions.
#[derive(Debug, Clone, Copy)]
pub struct Budget {
    pub mmstar: MmstarOptions,
    /// Rays for containment checks.
    pub rays: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self { mmstar: MmstarOptions::default(), rays: 1000 }
    }
}

impl Budget {
    /// Small budgets for batch runs.
    pub fn light() -> Self {
        Self { mmstar: MmstarOptions { opt_samples: 600, max_evals: 150 }, rays: 400 }
    }
}

/// `ℓ((K - x) ∩ E)` with Gaussians in `E`.
pub fn ell_section_at(k: &ConvexBody, e: &Subspace, x: &Vector, cfg: &SamplerConfig) -> Result<Estimate> {
    if x.amax() == 0.0 && k.require_interior().is_ok() {
        return measure::estimate_ell_section(k, e, cfg);
    }
    if let Shape::Cylinder(_) = k.shape() {
        return Err(Error::Unsupported("shifted cylinder section".into()));
    }
    let s = k.section_through(e, x)?.ok_or(Error::DegenerateSection)?;
    measure::estimate_ell(&s, cfg)
}

/// Largest violation of `gauge_outer(r) <= factor · gauge_inner(r)` over
/// sphere rays; nonpositive means the containment `inner ⊆ factor · outer`
/// held on every ray.
pub fn ray_containment_excess(inner: &ConvexBody, outer: &ConvexBody, factor: f64, rays: usize, seed: u64) -> f64 {
    let pts = draw(inner.dim(), Distribution::Sphere, &SamplerConfig::new(seed, rays));
    pts.iter()
        .map(|r| {
            let go = outer.gauge(r);
            let gi = inner.gauge(r);
            (go - factor * gi) / gi.max(1e-300)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Checks `d ⊆ b`: exact for polytope `d` (vertex gauges), by rays otherwise.
pub fn check_nested(d: &ConvexBody, b: &ConvexBody, rays: usize) -> Result<()> {
    let ratio = match d.as_polytope() {
        Some(p) => p.vertices().iter().map(|v| b.gauge(v.as_slice())).fold(0.0, f64::max),
        None => 1.0 + ray_containment_excess(d, b, 1.0, rays, 0x6e57).max(0.0),
    };
    if ratio > 1.0 + 1e-9 {
        return Err(Error::NotNested { ratio });
    }
    Ok(())
}
