use super::{proposition_iterate, Budget, CertKind, EmbeddingReport, Ledger, Round};
use crate::body::{AffinePosition, ConvexBody, Shape};
use crate::constructions::lemmas::lemma4_shift;
use crate::error::{Error, Result};
use crate::linalg::Vector;
use crate::measure;
use crate::positions;
use crate::sampling::{estimate_many, Distribution, Estimate, SamplerConfig};

/// Body after the first embedding step, with `0` at the vertex centroid,
/// `K - K` in its `M M*` position and `ℓ((K-K)°) = √n` (on the tuning sample).
#[derive(Debug, Clone)]
pub struct Stage1 {
    /// Input body to embedded body.
    pub position: AffinePosition,
    pub body: ConvexBody,
    pub difference: ConvexBody,
    /// Measured `M(K-K) M*(K-K)` after the embedding.
    pub r_hat: Estimate,
    pub ledger: Ledger,
}

fn base_point(k: &ConvexBody) -> Vector {
    match k.shape() {
        Shape::Polytope(p) => {
            let mut c = Vector::zeros(k.dim());
            for v in p.vertices() {
                c += v;
            }
            c / p.n_vertices() as f64
        }
        Shape::Ellipsoid(e) => e.center().clone(),
        Shape::Cylinder(_) => Vector::zeros(k.dim()),
    }
}

pub fn stage1_embed(k: &ConvexBody, cfg: &SamplerConfig, budget: &Budget) -> Result<Stage1> {
    let n = k.dim();
    let nf = n as f64;
    let c0 = base_point(k);
    let k0 = k.shifted(&c0)?;
    k0.require_interior()?;
    let b = k0.difference_body()?;
    let pos = positions::mmstar_position_with(&b, &cfg.derive(11), &budget.mmstar)?;
    let t = pos.position.linear.clone();
    let tb = b.linear_image(&t)?;
    let lp = measure::estimate_ell_polar(&tb, &cfg.derive(12))?;
    let t = t * (nf.sqrt() / lp.mean);
    let k1 = k0.linear_image(&t)?;
    let b1 = b.linear_image(&t)?;
    let position = AffinePosition::new(t.clone(), -(&t * &c0))?;

    let check = cfg.derive(13);
    let mut ledger = Ledger::default();
    let polar = measure::estimate_ell_polar(&b1, &check)?;
    ledger.check("stage1.ell_diff_polar", polar.lower(crate::constants::MC_BAND), nf.sqrt(), CertKind::Statistical)?;
    let mstar = measure::estimate_mstar(&k1, &check)?;
    ledger.check("stage1.mstar_le_1", mstar.lower(crate::constants::MC_BAND), 1.0, CertKind::Statistical)?;
    let (m, ms) = measure::estimate_m_mstar(&b1, &check)?;
    let r_prod = m.mean * ms.mean;
    let r_hat = Estimate {
        mean: r_prod,
        stderr: r_prod * ((m.stderr / m.mean).powi(2) + (ms.stderr / ms.mean).powi(2)).sqrt(),
        n_samples: m.n_samples,
        seed: m.seed,
    };
    let ell_b = measure::estimate_ell(&b1, &check)?;
    ledger.check("stage1.ell_diff_vs_sqrt_n_R", ell_b.lower(crate::constants::MC_BAND), nf.sqrt() * r_hat.upper(crate::constants::MC_BAND), CertKind::Statistical)?;
    ledger.measure("stage1.mstar", mstar.mean);
    ledger.measure("stage1.ell_diff", ell_b.mean);
    ledger.measure("stage1.ell_diff_polar", polar.mean);
    ledger.measure("stage1.R_hat", r_hat.mean);
    ledger.measure("stage1.mmstar_objective", pos.objective);
    Ok(Stage1 { position, body: k1, difference: b1, r_hat, ledger })
}

/// Multi-scale embedding: one shift `v` such that every `K_v ∩ E_l` has small `ℓ`.
pub fn theorem1_pipeline(k: &ConvexBody, eps_list: &[f64], cfg: &SamplerConfig, budget: &Budget) -> Result<EmbeddingReport> {
    let n = k.dim();
    if n < 3 {
        return Err(Error::Unsupported(format!("multi-scale embedding needs dimension >= 3, got {n}")));
    }
    if eps_list.is_empty() {
        return Err(Error::NonPositive("number of scales"));
    }
    if eps_list.iter().any(|&e| !(e > 0.0 && e < 1.0)) {
        return Err(Error::NonPositive("eps (must lie in (0,1))"));
    }
    let nf = n as f64;
    let st = stage1_embed(k, cfg, budget)?;
    let mut ledger = st.ledger.clone();
    let mut rounds: Vec<Round> = Vec::new();
    let mut scales = Vec::new();
    for (i, &eps) in eps_list.iter().enumerate() {
        let l = (-eps.log2()).round().max(1.0);
        let rep = proposition_iterate(&st.body, eps, 1.0 / eps, &cfg.derive(200 + i as u64), budget)?;
        ledger.extend_prefixed(&format!("l{l}."), rep.ledger);
        rounds.extend(rep.rounds);
        scales.push((eps, l, rep.shift_u, rep.subspace_e));
    }
    let s: f64 = scales.iter().map(|(_, l, _, _)| 1.0 / (l * l)).sum();
    let mut v = Vector::zeros(n);
    for (_, l, u, _) in &scales {
        v += u / (l * l * s);
    }
    let kv = st.body.shifted(&v)?;
    let check = cfg.derive(300);
    for (eps, l, u, e) in &scales {
        let ku = st.body.shifted(u)?;
        let basis = e.basis().clone();
        let est = estimate_many(e.dim(), Distribution::Gaussian, &check, 2, |g, o| {
            let y = (&basis * Vector::from_column_slice(g)).data.as_vec().clone();
            o[0] = kv.gauge(&y);
            o[1] = ku.gauge(&y);
        });
        ledger.check(format!("l{l}.shift_sum"), est[0].mean, s * l * l * est[1].mean, CertKind::Structural)?;
        ledger.check(format!("l{l}.dim_E"), (1.0 - eps) * nf - 1.0, e.dim() as f64, CertKind::Structural)?;
        ledger.measure(format!("l{l}.ell_v_over_sqrt_n"), est[0].mean / nf.sqrt());
        ledger.measure(format!("l{l}.ell_u_over_sqrt_n"), est[1].mean / nf.sqrt());
    }
    let (_, _, _, last_e) = scales.last().cloned().expect("nonempty");
    Ok(EmbeddingReport {
        pipeline: "theorem1".into(),
        position: st.position,
        shift_u: v,
        subspace_e: last_e,
        subspaces: scales.into_iter().map(|(eps, _, _, e)| (format!("eps={eps}"), e)).collect(),
        rounds,
        ledger,
        seed: cfg.seed,
    })
}

/// Iteration to `E` of codimension about `log n`, then a Lemma 4 shift on
/// `E⊥` and the midpoint shift `w = (u+v)/2`.
pub fn theorem2_pipeline(k: &ConvexBody, cfg: &SamplerConfig, budget: &Budget) -> Result<EmbeddingReport> {
    let n = k.dim();
    if n < 4 {
        return Err(Error::Unsupported(format!("midpoint embedding needs dimension >= 4, got {n}")));
    }
    let nf = n as f64;
    let st = stage1_embed(k, cfg, budget)?;
    let mut ledger = st.ledger.clone();
    let eps = (nf.ln() / nf).min(0.5).max(1.0 / nf);
    let a_hyp = nf.cbrt();
    ledger.measure("eps", eps);
    ledger.measure("A_hypothesis", a_hyp);
    let prop = proposition_iterate(&st.body, eps, a_hyp, &cfg.derive(200), budget)?;
    ledger.extend_prefixed("", prop.ledger);
    let u = prop.shift_u;
    let e = prop.subspace_e;
    let f = e.complement();
    let v = if f.dim() == 0 {
        ledger.flag("E is the whole space; Lemma 4 step skipped");
        u.clone()
    } else {
        let l4 = lemma4_shift(&st.body, &f, &cfg.derive(201))?;
        ledger.extend_prefixed("", l4.ledger);
        l4.u
    };
    let w = (&u + &v) * 0.5;
    let kw = st.body.shifted(&w)?;
    let ku = st.body.shifted(&u)?;
    // v may sit on the boundary, so K_v ∩ F is materialized in F coordinates
    let kv_f = if f.dim() > 0 { st.body.section_through(&f, &v)? } else { None };
    let (ue, uf) = (e.basis().clone(), f.basis().clone());
    let check = cfg.derive(301);
    let est = estimate_many(n, Distribution::Gaussian, &check, 3, |g, o| {
        let gv = Vector::from_column_slice(g);
        let ce = ue.transpose() * &gv;
        let ge = &ue * &ce;
        o[0] = kw.gauge(g);
        o[1] = ku.gauge(ge.as_slice());
        o[2] = match &kv_f {
            Some(s) => s.gauge((uf.transpose() * &gv).as_slice()),
            None if uf.ncols() == 0 => 0.0,
            None => f64::INFINITY,
        };
    });
    ledger.check("midpoint_triangle", est[0].mean, 2.0 * est[1].mean + 2.0 * est[2].mean, CertKind::Structural)?;
    let (m, ms) = measure::estimate_m_mstar(&kw, &cfg.derive(302))?;
    ledger.measure("final.M", m.mean);
    ledger.measure("final.Mstar", ms.mean);
    ledger.measure("final.product", m.mean * ms.mean);
    ledger.measure("final.ell_w_over_sqrt_n", est[0].mean / nf.sqrt());
    Ok(EmbeddingReport {
        pipeline: "theorem2".into(),
        position: st.position,
        shift_u: w,
        subspace_e: e,
        subspaces: vec![("F".into(), f)],
        rounds: prop.rounds,
        ledger,
        seed: cfg.seed,
    })
}
