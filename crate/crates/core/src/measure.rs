//! Monte Carlo estimates of M, M*, ℓ and ℓ of the polar, plus volumes.

use crate::body::{ConvexBody, Shape, Subspace};
use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, Vector};
use crate::sampling::{estimate_many, estimate_mean, Distribution, Estimate, SamplerConfig};

/// Sphere average of the gauge.
pub fn estimate_m(k: &ConvexBody, cfg: &SamplerConfig) -> Result<Estimate> {
    k.require_interior()?;
    Ok(estimate_mean(k.dim(), Distribution::Sphere, cfg, |x| k.gauge(x)))
}

/// Sphere average of the support function (`M(K°)`).
pub fn estimate_mstar(k: &ConvexBody, cfg: &SamplerConfig) -> Result<Estimate> {
    k.require_interior()?;
    Ok(estimate_mean(k.dim(), Distribution::Sphere, cfg, |u| k.support(u)))
}

/// Gaussian average of the gauge.
pub fn estimate_ell(k: &ConvexBody, cfg: &SamplerConfig) -> Result<Estimate> {
    k.require_interior()?;
    Ok(estimate_mean(k.dim(), Distribution::Gaussian, cfg, |x| k.gauge(x)))
}

/// Gaussian average of the support function (`ℓ(K°)`).
pub fn estimate_ell_polar(k: &ConvexBody, cfg: &SamplerConfig) -> Result<Estimate> {
    k.require_interior()?;
    Ok(estimate_mean(k.dim(), Distribution::Gaussian, cfg, |u| k.support(u)))
}

/// `(M, M*)` on common samples.
pub fn estimate_m_mstar(k: &ConvexBody, cfg: &SamplerConfig) -> Result<(Estimate, Estimate)> {
    k.require_interior()?;
    let e = estimate_many(k.dim(), Distribution::Sphere, cfg, 2, |x, o| {
        o[0] = k.gauge(x);
        o[1] = k.support(x);
    });
    Ok((e[0], e[1]))
}

/// `ℓ(K ∩ E)` with Gaussians drawn inside `E`.
pub fn estimate_ell_section(k: &ConvexBody, e: &Subspace, cfg: &SamplerConfig) -> Result<Estimate> {
    section_mean(k, e, Distribution::Gaussian, cfg)
}

/// `M(K ∩ E)` with sphere points drawn inside `E`.
pub fn estimate_m_section(k: &ConvexBody, e: &Subspace, cfg: &SamplerConfig) -> Result<Estimate> {
    section_mean(k, e, Distribution::Sphere, cfg)
}

fn section_mean(k: &ConvexBody, e: &Subspace, dist: Distribution, cfg: &SamplerConfig) -> Result<Estimate> {
    k.require_interior()?;
    if e.ambient_dim() != k.dim() {
        return Err(Error::DimensionMismatch { expected: k.dim(), got: e.ambient_dim() });
    }
    if e.dim() == 0 {
        return Ok(Estimate::exact(0.0));
    }
    let u = e.basis();
    let n = k.dim();
    Ok(estimate_mean(e.dim(), dist, cfg, |g| {
        let mut x = vec![0.0; n];
        for (j, gj) in g.iter().enumerate() {
            for (i, xi) in x.iter_mut().enumerate() {
                *xi += u[(i, j)] * gj;
            }
        }
        k.gauge(&x)
    }))
}

/// Exact volume: face-lattice cone decomposition for polytopes, closed forms
/// otherwise.
pub fn exact_volume(k: &ConvexBody) -> Result<f64> {
    if k.as_polytope().is_some() && k.dim() > 10 {
        return Err(Error::Unsupported("exact polytope volume above dimension 10".into()));
    }
    k.volume()
}

/// Rejection estimate of `vol(K)` using uniform samples of `reference`, which
/// must be an ellipsoid or an axis-parallel box.
pub fn mc_volume(k: &ConvexBody, reference: &ConvexBody, cfg: &SamplerConfig) -> Result<Estimate> {
    let n = k.dim();
    if reference.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: reference.dim() });
    }
    let (dist, lin, shift): (Distribution, Matrix, Vector) = match reference.shape() {
        Shape::Ellipsoid(e) => (Distribution::Ball, e.factor().clone(), e.center().clone()),
        Shape::Polytope(p) => {
            let lo = Vector::from_fn(n, |i, _| p.vertices().iter().map(|v| v[i]).fold(f64::INFINITY, f64::min));
            let hi = Vector::from_fn(n, |i, _| p.vertices().iter().map(|v| v[i]).fold(f64::NEG_INFINITY, f64::max));
            let boxed = (&hi - &lo).iter().product::<f64>();
            let vol = reference.volume()?;
            if p.n_vertices() != 1 << n || (vol - boxed).abs() > 1e-9 * boxed {
                return Err(Error::Unsupported("mc_volume reference must be a box or an ellipsoid".into()));
            }
            (Distribution::Cube, Matrix::from_diagonal(&((&hi - &lo) * 0.5)), (&hi + &lo) * 0.5)
        }
        Shape::Cylinder(_) => return Err(Error::Unsupported("cylinder as mc_volume reference".into())),
    };
    let ref_vol = reference.volume()?;
    let tol = 1e-9 * reference.circumradius().max(k.circumradius());
    // a containment witness: K ⊆ R iff h_K <= h_R in every direction
    let e = estimate_many(n, dist, cfg, 2, |y, o| {
        let x = &lin * Vector::from_column_slice(y) + &shift;
        o[0] = if k.contains(x.as_slice(), 0.0) { 1.0 } else { 0.0 };
        let nrm = linalg::dot(y, y).sqrt();
        o[1] = if nrm > 0.0 {
            let u: Vec<f64> = y.iter().map(|v| v / nrm).collect();
            (k.support(&u) - reference.support(&u) > tol) as u8 as f64
        } else {
            0.0
        };
    });
    if e[1].mean > 0.0 {
        return Err(Error::ContainmentViolated);
    }
    Ok(e[0].scaled(ref_vol))
}

/// `‖id: B_2^n → K‖ = max_{|x| = 1} gauge_K(x)`, the reciprocal inradius at 0.
pub fn operator_norm_to_body(k: &ConvexBody) -> Result<f64> {
    k.require_interior()?;
    match k.shape() {
        Shape::Polytope(p) => Ok(p.offsets().iter().map(|b| 1.0 / b).fold(0.0, f64::max)),
        Shape::Ellipsoid(_) => Ok(k.polar()?.circumradius()),
        Shape::Cylinder(c) => Ok(1.0 / c.inradius()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ball_values() {
        let cfg = SamplerConfig::new(5, 20_000);
        let b = ConvexBody::ball(3);
        let m = estimate_m(&b, &cfg).unwrap();
        assert!((m.mean - 1.0).abs() < 1e-12 && m.stderr < 1e-12);
        let l = estimate_ell(&b, &cfg).unwrap();
        assert!((l.mean - linalg::expected_chi(3)).abs() < 3.0 * l.stderr);
        assert!((operator_norm_to_body(&b).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn operator_norm_of_shifted_ellipse() {
        let e = ConvexBody::ellipsoid(
            Vector::from_column_slice(&[0.2, 0.1]),
            Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]),
        )
        .unwrap();
        let brute = (0..100000)
            .map(|k| {
                let t = k as f64 * std::f64::consts::TAU / 100000.0;
                e.gauge(&[t.cos(), t.sin()])
            })
            .fold(0.0, f64::max);
        assert!((operator_norm_to_body(&e).unwrap() - brute).abs() < 1e-6);
        let c = ConvexBody::cylinder(2, 0.25).unwrap();
        assert!((operator_norm_to_body(&c).unwrap() - 4.0).abs() < 1e-12);
    }

    #[test]
    fn mc_volume_ball_in_cube() {
        let mut normals = Vec::new();
        for i in 0..3 {
            for s in [1.0, -1.0] {
                let mut a = Vector::zeros(3);
                a[i] = s;
                normals.push(a);
            }
        }
        let cube = ConvexBody::from_halfspaces(&normals, &[1.0; 6]).unwrap();
        let cfg = SamplerConfig::new(2, 40_000);
        let v = mc_volume(&ConvexBody::ball(3), &cube, &cfg).unwrap();
        assert!((v.mean - 4.0 * std::f64::consts::PI / 3.0).abs() < 3.0 * v.stderr);
        assert!(matches!(mc_volume(&cube.scaled(2.0).unwrap(), &cube, &cfg), Err(Error::ContainmentViolated)));
    }
}
