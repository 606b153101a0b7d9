//! Banach–Mazur distance bounds: the containment functional, a brute-force
//! oracle for small dimensions, the Benyamini–Gordon bound and the
//! construction through `T = id + c S`.

use crate::body::{ConvexBody, Shape};
use crate::constants::{MC_BAND, THEOREM7_C};
use crate::constructions::{stage1_embed, theorem2_pipeline, Budget, CertKind, Ledger};
use crate::error::{Error, Result};
use crate::families;
use crate::linalg::{self, Matrix, Vector};
use crate::measure;
use crate::optim::NelderMead;
use crate::positions;
use crate::sampling::{draw, pool, Distribution, Estimate, SamplerConfig};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMethod {
    BgBound,
    Theorem5,
    Oracle,
}

/// `(T, x)` with `T(K - c_K) ⊆ (D - c_D) + x ⊆ λ T(K - c_K)`.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    #[serde(with = "crate::linalg::serde_rows")]
    pub linear: Matrix,
    #[serde(with = "crate::linalg::serde_vec")]
    pub shift: Vector,
    #[serde(with = "crate::linalg::serde_vec")]
    pub center_k: Vector,
    #[serde(with = "crate::linalg::serde_vec")]
    pub center_d: Vector,
}

impl Witness {
    /// Recomputes the containment functional at the stored witness.
    pub fn verify(&self, k: &ConvexBody, d: &ConvexBody) -> Result<f64> {
        containment_lambda(&k.shifted(&self.center_k)?, &d.shifted(&self.center_d)?, &self.linear, &self.shift)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DistanceBound {
    pub value: f64,
    pub stderr: f64,
    pub method: DistanceMethod,
    pub ingredients: Vec<(String, f64)>,
    pub seed: u64,
    pub witness: Option<Witness>,
    pub ledger: Ledger,
}

impl DistanceBound {
    pub fn ingredient(&self, name: &str) -> Option<f64> {
        self.ingredients.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

/// Least `λ` with `inner ⊆ λ · outer`; `outer` must contain 0 in its interior
/// (otherwise `+∞`).
pub fn inclusion_factor(inner: &ConvexBody, outer: &ConvexBody) -> Result<f64> {
    if inner.dim() != outer.dim() {
        return Err(Error::DimensionMismatch { expected: outer.dim(), got: inner.dim() });
    }
    if !(outer.interior_margin() > 0.0) {
        return Ok(f64::INFINITY);
    }
    if let Some(p) = inner.as_polytope() {
        return Ok(p.vertices().iter().map(|v| outer.gauge(v.as_slice())).fold(0.0, f64::max));
    }
    if let Some(p) = outer.as_polytope() {
        return Ok(p
            .normals()
            .iter()
            .zip(p.offsets())
            .map(|(a, b)| inner.support(a.as_slice()) / b)
            .fold(0.0, f64::max));
    }
    match (inner.shape(), outer.shape()) {
        (Shape::Ellipsoid(ei), Shape::Ellipsoid(eo)) => {
            let lo_inv = eo.factor().clone().try_inverse().ok_or(Error::Singular)?;
            let m = &lo_inv * ei.factor();
            let ci = &lo_inv * ei.center();
            let co = &lo_inv * eo.center();
            // inner ⊆ λ·outer  ⟺  max_v |L_o⁻¹(c_i + L_i v) - λ L_o⁻¹ c_o| <= λ
            let fits = |lam: f64| linalg::max_norm_on_ellipsoid(&(&ci - &co * lam), &m) <= lam;
            let mut hi = 1.0;
            while !fits(hi) {
                hi *= 2.0;
                if hi > 1e300 {
                    return Ok(f64::INFINITY);
                }
            }
            let mut lo = 0.0;
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if fits(mid) {
                    hi = mid;
                } else {
                    lo = mid;
                }
                if hi - lo <= 1e-15 * hi {
                    break;
                }
            }
            Ok(hi)
        }
        _ => Err(Error::Unsupported(format!("inclusion of a {} in a {}", inner.kind(), outer.kind()))),
    }
}

/// `[max_{k∈K} ‖Tk‖_{D+x}] · [max_{d∈D} ‖d+x‖_{TK}]`, an upper bound for `d(K, D)`
/// invariant under `T → sT`.
pub fn containment_lambda(k: &ConvexBody, d: &ConvexBody, t: &Matrix, x: &Vector) -> Result<f64> {
    let n = k.dim();
    if d.dim() != n || t.nrows() != n || t.ncols() != n || x.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: t.nrows() });
    }
    let det = t.determinant().abs();
    if !(det >= 1e-12 * linalg::op_norm(t).powi(n as i32)) {
        return Err(Error::Singular);
    }
    let tk = k.linear_image(t)?;
    let dx = d.translate(x)?;
    let a = inclusion_factor(&tk, &dx)?;
    if !a.is_finite() {
        return Ok(f64::INFINITY);
    }
    Ok(a * inclusion_factor(&dx, &tk)?)
}

fn random_orthogonal(n: usize, cfg: &SamplerConfig) -> Matrix {
    let g = draw(n, Distribution::Gaussian, &cfg.with_samples(n));
    let m = Matrix::from_fn(n, n, |i, j| g[j][i]);
    let qr = m.qr();
    let (mut q, r) = (qr.q(), qr.r());
    for j in 0..n {
        if r[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    q
}

pub const ORACLE_STARTS: usize = 20;
pub const ORACLE_EVALS: usize = 2000;

/// Multi-start Nelder–Mead minimization of `containment_lambda` over `(T, x)`,
/// starting from John-to-John alignments composed with random rotations.
/// Returns an upper bound with a re-verifiable witness.
pub fn bm_oracle(k: &ConvexBody, d: &ConvexBody, cfg: &SamplerConfig) -> Result<DistanceBound> {
    let n = k.dim();
    if d.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: d.dim() });
    }
    if n > 3 {
        return Err(Error::Unsupported(format!("distance oracle above dimension 3 (got {n})")));
    }
    let jk = positions::john_ellipsoid(k)?;
    let jd = positions::john_ellipsoid(d)?;
    let (ck, cd) = (jk.center().clone(), jd.center().clone());
    let k0 = k.shifted(&ck)?;
    let d0 = d.shifted(&cd)?;
    let lk_inv = jk.factor().clone().try_inverse().ok_or(Error::Singular)?;
    let base_d = jd.factor().clone();

    let objective = |p: &[f64]| -> f64 {
        let t = Matrix::from_row_slice(n, n, &p[..n * n]);
        let x = Vector::from_column_slice(&p[n * n..]);
        match containment_lambda(&k0, &d0, &t, &x) {
            Ok(v) if v.is_finite() && v > 0.0 => v.ln(),
            _ => 1e3,
        }
    };
    let run = |i: usize| {
        let q = if i == 0 { Matrix::identity(n, n) } else { random_orthogonal(n, &cfg.derive(i as u64)) };
        let t0 = &base_d * q * &lk_inv;
        let scale = linalg::op_norm(&t0).max(1e-12);
        let mut p0: Vec<f64> = t0.transpose().iter().copied().collect();
        p0.extend(std::iter::repeat(0.0).take(n));
        let nm = NelderMead { max_evals: ORACLE_EVALS, f_tol: 1e-13, x_tol: 1e-11 * scale, initial_step: 0.05 * scale };
        nm.minimize(objective, &p0)
    };
    let results: Vec<_> = pool().install(|| (0..ORACLE_STARTS).into_par_iter().map(run).collect());
    let (best_i, best) = results
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.value.total_cmp(&b.1.value))
        .expect("at least one start");
    let witness = Witness {
        linear: Matrix::from_row_slice(n, n, &best.x[..n * n]),
        shift: Vector::from_column_slice(&best.x[n * n..]),
        center_k: ck,
        center_d: cd,
    };
    let value = witness.verify(k, d)?;
    if !value.is_finite() {
        return Err(Error::Stall("no start reached a finite containment".into()));
    }
    Ok(DistanceBound {
        value,
        stderr: 0.0,
        method: DistanceMethod::Oracle,
        ingredients: vec![
            ("starts".into(), ORACLE_STARTS as f64),
            ("best_start".into(), best_i as f64),
            ("evals".into(), best.evals as f64),
        ],
        seed: cfg.seed,
        witness: Some(witness),
        ledger: Ledger::default(),
    })
}

/// The eight norms and ℓ-values entering the Benyamini–Gordon product.
#[derive(Debug, Clone, Copy)]
struct BgTerms {
    norm_k_polar: f64,
    ell_d: Estimate,
    norm_d: f64,
    ell_k_polar: Estimate,
    norm_d_polar: f64,
    ell_k: Estimate,
    norm_k: f64,
    ell_d_polar: Estimate,
}

impl BgTerms {
    fn evaluate(&self, n: usize) -> (f64, f64) {
        let a = self.norm_k_polar * self.ell_d.mean + self.norm_d * self.ell_k_polar.mean;
        let b = self.norm_d_polar * self.ell_k.mean + self.norm_k * self.ell_d_polar.mean;
        // the four estimates share samples, so errors are added without cancellation
        let se_a = self.norm_k_polar * self.ell_d.stderr + self.norm_d * self.ell_k_polar.stderr;
        let se_b = self.norm_d_polar * self.ell_k.stderr + self.norm_k * self.ell_d_polar.stderr;
        let nf = n as f64;
        (a * b / nf, (b * se_a + a * se_b) / nf)
    }

    fn named(&self) -> Vec<(String, f64)> {
        vec![
            ("norm_K_polar".into(), self.norm_k_polar),
            ("ell_D".into(), self.ell_d.mean),
            ("norm_D".into(), self.norm_d),
            ("ell_K_polar".into(), self.ell_k_polar.mean),
            ("norm_D_polar".into(), self.norm_d_polar),
            ("ell_K".into(), self.ell_k.mean),
            ("norm_K".into(), self.norm_k),
            ("ell_D_polar".into(), self.ell_d_polar.mean),
        ]
    }
}

fn require_at_least_one(value: f64, stderr: f64) -> Result<()> {
    if value + MC_BAND * stderr < 1.0 {
        return Err(Error::CertificateFailed { name: "distance_bound_at_least_1".into(), value, bound: 1.0 });
    }
    Ok(())
}

/// Benyamini–Gordon bound with `C = 1`, after moving both bodies to their John centers.
pub fn bg_bound(k: &ConvexBody, d: &ConvexBody, cfg: &SamplerConfig) -> Result<DistanceBound> {
    let n = k.dim();
    if d.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: d.dim() });
    }
    let k0 = k.shifted(positions::john_ellipsoid(k)?.center())?;
    let d0 = d.shifted(positions::john_ellipsoid(d)?.center())?;
    let terms = BgTerms {
        norm_k_polar: k0.circumradius(),
        ell_d: measure::estimate_ell(&d0, cfg)?,
        norm_d: measure::operator_norm_to_body(&d0)?,
        ell_k_polar: measure::estimate_ell_polar(&k0, cfg)?,
        norm_d_polar: d0.circumradius(),
        ell_k: measure::estimate_ell(&k0, cfg)?,
        norm_k: measure::operator_norm_to_body(&k0)?,
        ell_d_polar: measure::estimate_ell_polar(&d0, cfg)?,
    };
    let mut ledger = Ledger::default();
    ledger.check("contraction_K", terms.norm_k, terms.ell_k.upper(MC_BAND), CertKind::Regression)?;
    ledger.check("contraction_D", terms.norm_d, terms.ell_d.upper(MC_BAND), CertKind::Regression)?;
    ledger.check("contraction_K_polar", terms.norm_k_polar, terms.ell_k_polar.upper(MC_BAND), CertKind::Regression)?;
    ledger.check("contraction_D_polar", terms.norm_d_polar, terms.ell_d_polar.upper(MC_BAND), CertKind::Regression)?;
    let (value, stderr) = terms.evaluate(n);
    require_at_least_one(value, stderr)?;
    Ok(DistanceBound {
        value,
        stderr,
        method: DistanceMethod::BgBound,
        ingredients: terms.named(),
        seed: cfg.seed,
        witness: None,
        ledger,
    })
}

/// Embeds `x` with `ℓ(X) = √n` and small `ℓ(X°)`: the midpoint pipeline for
/// `n >= 4`, otherwise the first embedding step followed by a John-center shift.
fn embed(x: &ConvexBody, cfg: &SamplerConfig, budget: &Budget, ledger: &mut Ledger, tag: &str) -> Result<ConvexBody> {
    let n = x.dim();
    let x1 = if n >= 4 {
        let rep = theorem2_pipeline(x, cfg, budget)?;
        ledger.extend_prefixed(&format!("{tag}.embed."), rep.ledger);
        x.affine_image(&rep.position)?.shifted(&rep.shift_u)?
    } else {
        let st = stage1_embed(x, cfg, budget)?;
        ledger.extend_prefixed(&format!("{tag}.embed."), st.ledger);
        ledger.flag(format!("{tag}: dimension {n} < 4, embedded by the first step and a John-center shift"));
        let c = positions::john_ellipsoid(&st.body)?.center().clone();
        st.body.shifted(&c)?
    };
    let ell = measure::estimate_ell(&x1, &cfg.derive(400))?;
    x1.scaled(ell.mean / (n as f64).sqrt())
}

struct Side {
    norm: f64,
    norm_polar: f64,
    ell: Estimate,
    ell_polar: Estimate,
}

fn band(a: &Estimate, b: &Estimate) -> f64 {
    MC_BAND * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt()
}

/// `TX` for `T = id + (W/√(n log n)) S`, `S` the John map of `X`, with the four
/// displays checked against measured values.
fn t_side(x: &ConvexBody, w: f64, cfg: &SamplerConfig, ledger: &mut Ledger, tag: &str) -> Result<Side> {
    let n = x.dim();
    let nf = n as f64;
    let c = w / (nf * nf.ln()).sqrt();
    let john = positions::john_ellipsoid(x)?;
    let s = linalg::sym_inv_sqrt(john.shape());
    let t = Matrix::identity(n, n) + &s * c;
    let tx = x.linear_image(&t)?;
    let sx = x.linear_image(&s)?;
    let ell_x = measure::estimate_ell(x, cfg)?;
    let ell_x_polar = measure::estimate_ell_polar(x, cfg)?;
    let ell_tx = measure::estimate_ell(&tx, cfg)?;
    let ell_tx_polar = measure::estimate_ell_polar(&tx, cfg)?;
    let ell_sx_polar = measure::estimate_ell_polar(&sx, cfg)?;
    let norm = measure::operator_norm_to_body(&tx)?;
    let norm_polar = tx.circumradius();

    let mut l = Ledger::default();
    l.check("display11_norm", norm, (nf * nf.ln()).sqrt() / w, CertKind::Regression)?;
    l.check("display12_ell", ell_tx.mean, ell_x.mean + band(&ell_tx, &ell_x), CertKind::Statistical)?;
    l.check(
        "display13_ell_polar",
        ell_tx_polar.mean,
        ell_x_polar.mean + c * ell_sx_polar.mean + MC_BAND * (ell_x_polar.stderr + c * ell_sx_polar.stderr),
        CertKind::Statistical,
    )?;
    l.check("display14_contraction", norm_polar, ell_tx_polar.upper(MC_BAND), CertKind::Statistical)?;
    l.check("john_polar_ell", ell_sx_polar.mean, THEOREM7_C * nf * nf.ln().sqrt(), CertKind::Regression)?;
    for f in l.certified.iter().filter(|f| !f.passed) {
        l.flags.push(format!("{} outside its band ({:.4e} > {:.4e})", f.name, f.value, f.bound));
    }
    l.measure("c", c);
    l.measure("ell_X", ell_x.mean);
    l.measure("ell_X_polar", ell_x_polar.mean);
    l.measure("ell_SX_polar", ell_sx_polar.mean);
    ledger.extend_prefixed(&format!("{tag}."), l);
    Ok(Side { norm, norm_polar, ell: ell_tx, ell_polar: ell_tx_polar })
}

/// Distance bound through the embeddings `TK` and `UD`, where `UD` mirrors the
/// construction on the polar of `D`.
pub fn theorem5_bound(k: &ConvexBody, d: &ConvexBody, cfg: &SamplerConfig, budget: &Budget) -> Result<DistanceBound> {
    let n = k.dim();
    if d.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: d.dim() });
    }
    if n < 2 {
        return Err(Error::Unsupported("distance bound in dimension 1".into()));
    }
    let nf = n as f64;
    let mut ledger = Ledger::default();
    let k1 = embed(k, &cfg.derive(1), budget, &mut ledger, "K")?;
    let d1 = embed(d, &cfg.derive(2), budget, &mut ledger, "D")?;
    let wcfg = cfg.derive(3);
    let w_k = measure::estimate_ell_polar(&k1, &wcfg)?.mean / nf.sqrt();
    let w_d = measure::estimate_ell_polar(&d1, &wcfg)?.mean / nf.sqrt();
    let w = w_k.max(w_d);
    // X = (D1 / W_D)° has ℓ(X) = √n and ℓ(X°) = √n W_D
    let x = d1.scaled(1.0 / w_d)?.polar()?;

    let scfg = cfg.derive(4);
    let ks = t_side(&k1, w, &scfg, &mut ledger, "K")?;
    let xs = t_side(&x, w, &scfg, &mut ledger, "D")?;
    // (UD)° = TX, so the roles of norm/polar norm and ℓ/ℓ° swap on the D side
    let terms = BgTerms {
        norm_k_polar: ks.norm_polar,
        ell_d: xs.ell_polar,
        norm_d: xs.norm_polar,
        ell_k_polar: ks.ell_polar,
        norm_d_polar: xs.norm,
        ell_k: ks.ell,
        norm_k: ks.norm,
        ell_d_polar: xs.ell,
    };
    let (value, stderr) = terms.evaluate(n);
    require_at_least_one(value, stderr)?;
    let mut ingredients = terms.named();
    ingredients.push(("W_K".into(), w_k));
    ingredients.push(("W_D".into(), w_d));
    ingredients.push(("W".into(), w));
    ledger.measure("constant", value / (nf * nf.ln().sqrt() * w));
    ledger.measure("over_n_4_3", value / nf.powf(4.0 / 3.0));
    Ok(DistanceBound {
        value,
        stderr,
        method: DistanceMethod::Theorem5,
        ingredients,
        seed: cfg.seed,
        witness: None,
        ledger,
    })
}

/// Hull of `m` standard Gaussian points (with their negatives when `symmetric`).
pub fn gluskin_sample(n: usize, m: usize, symmetric: bool, seed: u64) -> Result<ConvexBody> {
    families::gaussian_polytope(n, m, symmetric, seed)
}

/// Radius of the largest centered ball inside `k`.
pub fn inradius(k: &ConvexBody) -> Result<f64> {
    Ok(1.0 / measure::operator_norm_to_body(k)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn lambda_identity_and_homothety() {
        let k = families::cross_polytope(3).unwrap();
        let i = Matrix::identity(3, 3);
        let z = Vector::zeros(3);
        assert_relative_eq!(containment_lambda(&k, &k, &i, &z).unwrap(), 1.0, epsilon = 1e-12);
        let b = ConvexBody::ball(3);
        let b2 = b.scaled(2.0).unwrap();
        assert_relative_eq!(containment_lambda(&b, &b2, &i, &z).unwrap(), 1.0, epsilon = 1e-9);
        let t = Matrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.1, 1.3, 0.0, 0.0, 0.4, 0.8]);
        let base = containment_lambda(&k, &b, &t, &z).unwrap();
        assert_relative_eq!(containment_lambda(&k, &b, &(t * 3.7), &z).unwrap(), base, max_relative = 1e-10);
        assert_eq!(containment_lambda(&k, &b, &Matrix::zeros(3, 3), &z), Err(Error::Singular));
    }

    #[test]
    fn ellipsoid_inclusion_matches_rays() {
        let inner = ConvexBody::ellipsoid(Vector::from_vec(vec![0.3, -0.1]), Matrix::from_row_slice(2, 2, &[0.5, 0.1, 0.1, 0.2])).unwrap();
        let outer = ConvexBody::ellipsoid(Vector::from_vec(vec![0.1, 0.2]), Matrix::from_row_slice(2, 2, &[2.0, -0.3, -0.3, 1.0])).unwrap();
        let f = inclusion_factor(&inner, &outer).unwrap();
        let l = inner.as_ellipsoid().unwrap().factor().clone();
        let c = inner.as_ellipsoid().unwrap().center().clone();
        let brute = (0..20000)
            .map(|i| {
                let a = i as f64 * std::f64::consts::TAU / 20000.0;
                let y = &c + &l * Vector::from_vec(vec![a.cos(), a.sin()]);
                outer.gauge(y.as_slice())
            })
            .fold(0.0, f64::max);
        assert_relative_eq!(f, brute, max_relative = 1e-6);
    }

    #[test]
    fn triangle_disc_john_alignment_gives_two() {
        let t = families::regular_simplex(2).unwrap();
        let r = bm_oracle(&t, &ConvexBody::ball(2), &SamplerConfig::new(3, 1)).unwrap();
        assert!(r.value >= 2.0 - 1e-9 && r.value <= 2.0 * 1.001, "{}", r.value);
        let w = r.witness.as_ref().unwrap();
        assert_relative_eq!(w.verify(&t, &ConvexBody::ball(2)).unwrap(), r.value, epsilon = 1e-12);
    }

    #[test]
    fn ball_bg_bound() {
        let n = 6;
        let b = ConvexBody::ball(n);
        let r = bg_bound(&b, &b, &SamplerConfig::new(1, 20_000)).unwrap();
        let chi = linalg::expected_chi(n);
        assert!((r.value - 4.0 * chi * chi / n as f64).abs() <= 3.0 * r.stderr + 1e-12, "{} {}", r.value, r.stderr);
        assert_eq!(r.ingredients.len(), 8);
    }
}
