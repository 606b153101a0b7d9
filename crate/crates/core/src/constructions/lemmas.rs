use super::{check_nested, ell_section_at, Budget, CertKind, Ledger};
use crate::body::{ConvexBody, Subspace};
use crate::constants::{LEMMA1_RATIO_MAX, LEMMA2_C, LEMMA3_C, MC_BAND};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::measure;
use crate::positions::{self, mmstar_position_with};
use crate::sampling::{estimate_many, Distribution, Estimate, SamplerConfig};

/// Largest difference cloud (vertex pairs) for which `lemma4_shift` builds
/// the hull of `K - K` in dimension above 6.
const DIFF_HULL_POINTS: usize = 128;

/// Minimizer `μ₀` of `θ(μ) = v/μ + w/(1-μ)` on `(0,1)` and `θ(μ₀) = (√v+√w)²`.
pub fn mu_combine(v: f64, w: f64) -> Result<(f64, f64)> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(Error::NonPositive("v"));
    }
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::NonPositive("w"));
    }
    // (1 - √r)/(1 - r) with r = w/v, written without the removable singularity
    let sr = (w / v).sqrt();
    let mu0 = 1.0 / (1.0 + sr);
    let theta = v / mu0 + w * (1.0 + sr) / sr;
    Ok((mu0, theta))
}

#[derive(Debug, Clone)]
pub struct Lemma2 {
    pub subspace: Subspace,
    pub t: Matrix,
    /// Eigenvalues of `T`, ascending.
    pub eigenvalues: Vec<f64>,
    pub a: f64,
    /// `R̂(D) = M(SD)·M*(SD)`.
    pub r_hat: f64,
    /// `(vol B / vol D)^{1/m}`.
    pub volume_ratio: f64,
    pub ell_section: Estimate,
    pub rhs: f64,
    pub ledger: Ledger,
}

/// Subspace spanned by the `⌈am⌉` smallest eigenvectors of `T = id + M*(D)·S`.
pub fn lemma2_construct(d: &ConvexBody, b: &ConvexBody, a: f64, cfg: &SamplerConfig, budget: &Budget) -> Result<Lemma2> {
    if !(a > 0.0) {
        return Err(Error::NonPositive("a"));
    }
    if a >= 1.0 {
        return Err(Error::Unsupported("lemma 2 needs a < 1".into()));
    }
    if d.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: b.dim(), got: d.dim() });
    }
    if !d.is_symmetric() || !b.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    check_nested(d, b, budget.rays)?;
    let m = d.dim();
    let mf = m as f64;
    let mut ledger = Ledger::default();

    let volume_ratio = (b.volume()? / d.volume()?).powf(1.0 / mf);
    let pos = mmstar_position_with(d, &cfg.derive(21), &budget.mmstar)?;
    let s0 = pos.position.linear;
    let ms0 = measure::estimate_mstar(&d.linear_image(&s0)?, cfg)?;
    let s = linalg::symmetrize(&(s0 / ms0.mean));
    let (m_sd, mstar_sd) = measure::estimate_m_mstar(&d.linear_image(&s)?, cfg)?;
    let r_hat = m_sd.mean * mstar_sd.mean;
    let mstar_d = measure::estimate_mstar(d, cfg)?;
    let t = linalg::symmetrize(&(Matrix::identity(m, m) + &s * mstar_d.mean));

    let (eig, vecs) = linalg::sym_eigen_sorted(&t);
    let k = ((a * mf - 1e-9).ceil() as usize).clamp(1, m);
    let subspace = Subspace::span(m, &(0..k).map(|j| vecs.column(j).into_owned()).collect::<Vec<_>>());

    ledger.check("lemma2.eigenvalues_at_least_one", 1.0 - eig[0], 0.0, CertKind::Structural)?;
    ledger.check("lemma2.dim_E", a * mf, subspace.dim() as f64, CertKind::Structural)?;
    let log_det: f64 = eig.iter().map(|l| l.ln()).sum();
    let norm_bound = (log_det / ((1.0 - a) * mf)).exp();
    ledger.check("lemma2.eq2_norm_on_E", eig[k - 1], norm_bound, CertKind::Structural)?;

    let ell_section = ell_section_at(d, &subspace, &Vector::zeros(m), cfg)?;
    let ell_b = measure::estimate_ell(b, cfg)?;
    let ell_b_polar = measure::estimate_ell_polar(b, cfg)?;
    let ell_td = measure::estimate_ell(&d.linear_image(&t)?, cfg)?;
    let band = MC_BAND * (ell_section.stderr.powi(2) + (eig[k - 1] * ell_td.stderr).powi(2)).sqrt();
    ledger.check("lemma2.section_vs_TD", ell_section.mean, eig[k - 1] * ell_td.mean + band, CertKind::Statistical)?;

    let base = volume_ratio * ell_b.mean * ell_b_polar.mean / mf;
    let rhs = r_hat * volume_ratio * ell_b.mean * base.max(1.0).powf(a / (1.0 - a));
    ledger.measure("lemma2.ell_D_cap_E", ell_section.mean);
    ledger.measure("lemma2.eq3_rhs", rhs);
    ledger.measure("lemma2.R_hat", r_hat);
    ledger.measure("lemma2.volume_ratio", volume_ratio);
    ledger.measure("lemma2.det_T", log_det.exp());
    ledger.check("lemma2.eq3_ratio", ell_section.mean / rhs, LEMMA2_C, CertKind::Regression)?;

    Ok(Lemma2 { subspace, t, eigenvalues: eig, a, r_hat, volume_ratio, ell_section, rhs, ledger })
}

#[derive(Debug, Clone)]
pub struct Lemma3 {
    /// The shift, in the coordinates of `Q`.
    pub x: Vector,
    pub subspace: Subspace,
    /// The `a` used (after clamping) and the unclamped `1/log(A·ℓ(B)ℓ(B°)/m)`.
    pub a: f64,
    pub a_formula: f64,
    pub clamped: bool,
    pub volume_ratio: f64,
    pub ell_section: Estimate,
    pub lemma2: Lemma2,
    pub ledger: Ledger,
}

/// Shift `x = (y + z)/2` (John center, Santaló point) and a subspace on which
/// `Q_x` has a small ℓ.
pub fn lemma3_construct(q: &ConvexBody, b: &ConvexBody, cfg: &SamplerConfig, budget: &Budget) -> Result<Lemma3> {
    if q.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: b.dim(), got: q.dim() });
    }
    if !b.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    check_nested(q, b, budget.rays)?;
    let m = q.dim();
    let mf = m as f64;
    let mut ledger = Ledger::default();
    let volume_ratio = (b.volume()? / q.volume()?).powf(1.0 / mf);

    let y = positions::john_ellipsoid(q)?.center().clone();
    let z = positions::centering_point(q)?;
    let x = (&y + &z) * 0.5;
    let qx = q.shifted(&x)?;
    let d = qx.central_intersection()?;

    let ell_b = measure::estimate_ell(b, cfg)?;
    let ell_b_polar = measure::estimate_ell_polar(b, cfg)?;
    let arg = volume_ratio * ell_b.mean * ell_b_polar.mean / mf;
    let a_formula = if arg > 1.0 { 1.0 / arg.ln() } else { f64::INFINITY };
    let a = a_formula.min(0.5);
    let clamped = a != a_formula;
    if clamped {
        ledger.flag(format!("lemma3: a clamped to {a} (log argument {arg:.4})"));
    }
    ledger.measure("lemma3.log_argument", arg);
    ledger.measure("lemma3.a_formula", a_formula);

    let l2 = lemma2_construct(&d, b, a, &cfg.derive(31), budget)?;
    let f = l2.subspace.clone();
    let dim_f = f.dim() as f64;
    ledger.check("lemma3.dim_F_vs_a_used", a * mf - dim_f, 0.0, CertKind::Structural)?;
    let stated = if a_formula.is_finite() { mf * a_formula - 1.0 } else { 0.0 };
    let kind = if clamped { CertKind::Regression } else { CertKind::Structural };
    ledger.check("lemma3.dim_F_statement", stated, dim_f, kind)?;

    let d_q = positions::dk_estimate(q)?;
    let d_d = positions::dk_estimate(&d)?;
    ledger.check("lemma3.d_D_le_3d_Q", d_d, 3.0 * d_q, CertKind::Regression)?;
    let ratio_d = (b.volume()? / d.volume()?).powf(1.0 / mf);
    ledger.check("lemma3.lemma1_volume_over_A", ratio_d / volume_ratio, LEMMA1_RATIO_MAX, CertKind::Regression)?;

    let ell_qx = ell_section_at(&qx, &f, &Vector::zeros(m), cfg)?;
    let ell_d = ell_section_at(&d, &f, &Vector::zeros(m), cfg)?;
    ledger.check("lemma3.Qx_section_le_D_section", ell_qx.mean, ell_d.mean, CertKind::Structural)?;
    let scale = volume_ratio * d_q.ln().max(1.0) * ell_b.mean;
    ledger.measure("lemma3.ell_Qx_cap_F", ell_qx.mean);
    ledger.check("lemma3.constant", ell_qx.mean / scale, LEMMA3_C, CertKind::Regression)?;
    ledger.extend_prefixed("", l2.ledger.clone());

    Ok(Lemma3 { x, subspace: f, a, a_formula, clamped, volume_ratio, ell_section: ell_qx, lemma2: l2, ledger })
}

#[derive(Debug, Clone)]
pub struct Lemma4 {
    pub u: Vector,
    pub chords: Vec<(Vector, Vector)>,
    pub ell_section: Estimate,
    pub ell_diff_section: Estimate,
    pub ell_diff: Estimate,
    pub ledger: Ledger,
}

/// Shift from the midpoints of the longest chords along a basis of `F`.
pub fn lemma4_shift(k: &ConvexBody, f: &Subspace, cfg: &SamplerConfig) -> Result<Lemma4> {
    let m = f.dim();
    if m == 0 {
        return Err(Error::NonPositive("dim F"));
    }
    let n = k.dim();
    let mut ledger = Ledger::default();
    // The hull of K - K grows quickly with dimension and vertex count; past
    // a small size its gauge is evaluated by LP instead.
    let kk = match k.as_polytope() {
        Some(p) if !k.is_symmetric() && n > 6 && p.n_vertices() * p.n_vertices() > DIFF_HULL_POINTS => None,
        _ => Some(k.difference_body()?),
    };
    let diff_gauge = |x: &[f64]| -> f64 {
        match (&kk, k.as_polytope()) {
            (Some(b), _) => b.gauge(x),
            (None, Some(p)) => p.difference_gauge_lp(x).unwrap_or(f64::NAN),
            (None, None) => unreachable!("only polytopes skip the hull"),
        }
    };
    let mut chords = Vec::with_capacity(m);
    let mut u = Vector::zeros(n);
    for e in f.vectors() {
        let (p, q) = k.max_chord(&e)?;
        let len = (&q - &p).norm();
        let expect = 1.0 / diff_gauge(e.as_slice());
        ledger.check("lemma4.chord_vs_difference_gauge", (len - expect).abs(), 1e-7 * expect, CertKind::Structural)?;
        u += (&p + &q) * (0.5 / m as f64);
        chords.push((p, q));
    }
    let ell_section = ell_section_at(k, f, &u, cfg)?;
    let (ell_diff_section, ell_diff) = match &kk {
        Some(b) => (ell_section_at(b, f, &Vector::zeros(n), cfg)?, measure::estimate_ell(b, cfg)?),
        None => {
            let uf = f.basis();
            let sec = estimate_many(m, Distribution::Gaussian, cfg, 1, |g, o| {
                let y = uf * Vector::from_column_slice(g);
                o[0] = diff_gauge(y.as_slice());
            })[0];
            let full = estimate_many(n, Distribution::Gaussian, cfg, 1, |g, o| o[0] = diff_gauge(g))[0];
            if !(sec.mean.is_finite() && full.mean.is_finite()) {
                return Err(Error::Lp("difference gauge"));
            }
            (sec, full)
        }
    };
    let c = 2.0 * (m * m) as f64;
    let band = MC_BAND * (ell_section.stderr.powi(2) + (c * ell_diff_section.stderr).powi(2)).sqrt();
    ledger.check("lemma4.sharp", ell_section.mean, c * ell_diff_section.mean + band, CertKind::Statistical)?;
    let band = MC_BAND * (ell_section.stderr.powi(2) + (c * ell_diff.stderr).powi(2)).sqrt();
    ledger.check("lemma4.statement", ell_section.mean, c * ell_diff.mean + band, CertKind::Statistical)?;
    ledger.measure("lemma4.ratio", ell_section.mean / ell_diff_section.mean);
    Ok(Lemma4 { u, chords, ell_section, ell_diff_section, ell_diff, ledger })
}
