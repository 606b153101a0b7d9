use super::{ray_containment_excess, Budget, CertKind, Certificate, EmbeddingReport, Ledger};
use crate::body::{AffinePosition, ConvexBody, Subspace};
use crate::constants::VOLUME_HYPOTHESIS_SLACK;
use crate::constructions::lemmas::{lemma3_construct, mu_combine};
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::positions;
use crate::sampling::{estimate_many, Distribution, Estimate, SamplerConfig};
use serde::Serialize;

/// State between rounds: `t = codim E / n`, the subspace and the shift.
#[derive(Debug, Clone, Serialize)]
pub struct IterationState {
    pub t: f64,
    pub subspace_e: Subspace,
    #[serde(with = "crate::linalg::serde_vec")]
    pub x: Vector,
    pub phi_estimate: Estimate,
}

#[derive(Debug, Clone, Serialize)]
pub struct Round {
    pub index: usize,
    pub t: f64,
    pub a: f64,
    pub a_clamped: bool,
    pub dim_f: usize,
    /// `ℓ(K_x ∩ E)` before the round.
    pub v: f64,
    /// `ℓ(K_z ∩ F)` for the new shift and subspace.
    pub w: f64,
    pub mu0: f64,
    /// `ℓ(K_u ∩ (E ⊕ F))`.
    pub phi: f64,
    /// Which shift produced the largest section `K_y ∩ E⊥`.
    pub y_choice: String,
    pub volume_ratio: f64,
    pub certified: Vec<Certificate>,
    pub state: IterationState,
}

fn embed_cols(basis: &Matrix, g: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    for (j, gj) in g.iter().enumerate() {
        for (i, o) in out.iter_mut().enumerate() {
            *o += basis[(i, j)] * gj;
        }
    }
}

/// The round-by-round iteration: each round finds a shift and a subspace `F`
/// of `E⊥` through the Lemma 3 construction and merges it into `(x, E)`.
pub fn proposition_iterate(
    k: &ConvexBody,
    eps: f64,
    a_hypothesis: f64,
    cfg: &SamplerConfig,
    budget: &Budget,
) -> Result<EmbeddingReport> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::NonPositive("eps (must lie in (0,1))"));
    }
    if !(a_hypothesis >= 1.0) {
        return Err(Error::NonPositive("A hypothesis (must be at least 1)"));
    }
    k.require_interior()?;
    let n = k.dim();
    let nf = n as f64;
    let kk = k.difference_body()?;
    let mut ledger = Ledger::default();
    let mut rounds = Vec::new();

    let santalo = positions::centering_point(k)?;
    let john = positions::john_ellipsoid(k)?.center().clone();

    let mut e = Subspace::zero(n);
    let mut x = Vector::zeros(n);
    let mut phi = Estimate::exact(0.0);

    for r in 0.. {
        let codim = n - e.dim();
        let t = codim as f64 / nf;
        if codim == 0 || t <= eps {
            break;
        }
        let perp = e.complement();
        let b = kk.section(&perp)?;
        let vol_b = b.volume()?;

        let mut best: Option<(String, Vector, ConvexBody, f64)> = None;
        for (label, y) in [("santalo", &santalo), ("john", &john), ("current", &x)] {
            if let Some(q) = k.section_through(&perp, y)? {
                let vol = q.volume()?;
                if best.as_ref().map_or(true, |bb| vol > bb.3) {
                    best = Some((label.to_string(), y.clone(), q, vol));
                }
            }
        }
        let (y_choice, y, q, vol_q) = best.ok_or(Error::DegenerateSection)?;
        let volume_ratio = (vol_b / vol_q).powf(1.0 / codim as f64);
        let mut rl = Ledger::default();
        rl.check("volume_hypothesis", volume_ratio, VOLUME_HYPOTHESIS_SLACK * a_hypothesis, CertKind::Regression)?;

        let l3 = lemma3_construct(&q, &b, &cfg.derive(100 + r as u64), budget)?;
        let z = &y + perp.basis() * &l3.x;
        let f = l3.subspace.lift(&perp);
        if f.dim() < 1 {
            return Err(Error::Stall(format!("round {r}: empty subspace F")));
        }
        rl.extend_prefixed("", l3.ledger.clone());

        let ef = e.direct_sum(&f);
        let (de, df) = (e.dim(), f.dim());
        let ue = e.basis().clone();
        let uf = f.basis().clone();
        let round_cfg = cfg.derive(500 + r as u64);
        let kz = k.shifted(&z)?;

        let (v, w, mu0, u, phi_new) = if de == 0 {
            let w = estimate_many(df, Distribution::Gaussian, &round_cfg, 1, |g, o| {
                let mut y = vec![0.0; n];
                embed_cols(&uf, g, &mut y);
                o[0] = kz.gauge(&y);
            })[0];
            (Estimate::exact(0.0), w, 0.0, z.clone(), w)
        } else {
            let kx = k.shifted(&x)?;
            // g = (g_E, g_F) in E ⊕ F
            let vw = estimate_many(de + df, Distribution::Gaussian, &round_cfg, 2, |g, o| {
                let mut y = vec![0.0; n];
                embed_cols(&ue, &g[..de], &mut y);
                o[0] = kx.gauge(&y);
                embed_cols(&uf, &g[de..], &mut y);
                o[1] = kz.gauge(&y);
            });
            let (mu0, theta) = mu_combine(vw[0].mean, vw[1].mean)?;
            let u = &x * mu0 + &z * (1.0 - mu0);
            let ku = k.shifted(&u)?;
            let phi_new = estimate_many(de + df, Distribution::Gaussian, &round_cfg, 1, |g, o| {
                let mut y = vec![0.0; n];
                let mut y2 = vec![0.0; n];
                embed_cols(&ue, &g[..de], &mut y);
                embed_cols(&uf, &g[de..], &mut y2);
                y.iter_mut().zip(&y2).for_each(|(a, b)| *a += b);
                o[0] = ku.gauge(&y);
            })[0];
            let ray_seed = round_cfg.seed ^ 0xa11;
            rl.check(
                "containment_mu_Kx",
                ray_containment_excess(&kx, &ku, 1.0 / mu0, budget.rays, ray_seed),
                0.0,
                CertKind::Structural,
            )?;
            rl.check(
                "containment_1mmu_Kz",
                ray_containment_excess(&kz, &ku, 1.0 / (1.0 - mu0), budget.rays, ray_seed + 1),
                0.0,
                CertKind::Structural,
            )?;
            rl.check(
                "triangle",
                phi_new.mean,
                vw[0].mean / mu0 + vw[1].mean / (1.0 - mu0),
                CertKind::Structural,
            )?;
            rl.check("theta_identity", (theta - (vw[0].mean.sqrt() + vw[1].mean.sqrt()).powi(2)).abs(), 1e-12 * theta, CertKind::Structural)?;
            (vw[0], vw[1], mu0, u, phi_new)
        };
        rl.check("claim_recursion", phi_new.mean.sqrt(), v.mean.sqrt() + w.mean.sqrt(), CertKind::Structural)?;
        rl.check("dim_E_increases", (e.dim() + 1) as f64, ef.dim() as f64, CertKind::Structural)?;
        let t_new = (n - ef.dim()) as f64 / nf;
        rl.check("dim_E_vs_t", nf * (1.0 - t_new) - 1.0, ef.dim() as f64, CertKind::Structural)?;

        e = ef;
        x = u;
        phi = phi_new;
        let state = IterationState { t: t_new, subspace_e: e.clone(), x: x.clone(), phi_estimate: phi };
        ledger.extend_prefixed(&format!("round{r}."), rl.clone());
        rounds.push(Round {
            index: r,
            t,
            a: l3.a,
            a_clamped: l3.clamped,
            dim_f: df,
            v: v.mean,
            w: w.mean,
            mu0,
            phi: phi_new.mean,
            y_choice,
            volume_ratio,
            certified: rl.certified,
            state,
        });
    }
    ledger.measure("final.dim_E", e.dim() as f64);
    ledger.measure("final.ell_over_sqrt_n", phi.mean / nf.sqrt());
    ledger.check("final.dim_E", (1.0 - eps) * nf - 1.0, e.dim() as f64, CertKind::Structural)?;
    Ok(EmbeddingReport {
        pipeline: "proposition".into(),
        position: AffinePosition::identity(n),
        shift_u: x,
        subspace_e: e,
        subspaces: Vec::new(),
        rounds,
        ledger,
        seed: cfg.seed,
    })
}
