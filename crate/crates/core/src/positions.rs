//! Ellipsoidal positions, the Santaló point and the M·M*-minimizing position.

use crate::body::{AffinePosition, ConvexBody, Ellipsoid, Polytope, Shape};
use crate::error::{Error, Result};
use crate::hull;
use crate::lattice::FaceLattice;
use crate::linalg::{self, Matrix, Vector};
use crate::minnorm;
use crate::optim::NelderMead;
use crate::sampling::{estimate_many, estimate_mean, Distribution, SamplerConfig};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PositionResult {
    pub position: AffinePosition,
    pub objective: f64,
    pub objective_stderr: f64,
    pub iterations: usize,
    pub converged: bool,
    pub seed: u64,
}

/// Maximal-volume inscribed ellipsoid.
pub fn john_ellipsoid(k: &ConvexBody) -> Result<Ellipsoid> {
    match k.shape() {
        Shape::Ellipsoid(e) => Ok(e.clone()),
        Shape::Cylinder(c) => {
            let n = k.dim();
            let mut d = Vector::from_element(n, 1.0);
            d[n - 1] = c.half_height();
            let l = c.map() * Matrix::from_diagonal(&d);
            Ellipsoid::new(Vector::zeros(n), &l * l.transpose())
        }
        Shape::Polytope(p) => john_polytope(p),
    }
}

fn sym_index(n: usize) -> Vec<(usize, usize)> {
    let mut idx = Vec::with_capacity(n * (n + 1) / 2);
    for p in 0..n {
        for q in p..n {
            idx.push((p, q));
        }
    }
    idx
}

/// Barrier method for `max log det B` subject to `a_i.c + |B a_i| <= b_i`.
fn john_polytope(poly: &Polytope) -> Result<Ellipsoid> {
    let n = poly.dim();
    let idx = sym_index(n);
    let nk = idx.len();
    let np = nk + n;
    let normals = poly.normals();
    let offsets = poly.offsets();
    let m = normals.len();
    // scale so the body has unit size; undone at the end
    let scale = offsets.iter().copied().fold(0.0f64, f64::max).max(1e-300);
    let offs: Vec<f64> = offsets.iter().map(|b| b / scale).collect();

    // column k = (p,q) of G_i (the map β -> B a_i) holds a_q in row p and
    // a_p in row q; entries are listed as (row, component of a)
    let cols: Vec<Vec<(usize, usize)>> =
        idx.iter().map(|&(p, q)| if p == q { vec![(p, p)] } else { vec![(p, q), (q, p)] }).collect();
    let gt_times = |a: &Vector, w: &Vector| -> Vector {
        Vector::from_iterator(nk, cols.iter().map(|c| c.iter().map(|&(row, comp)| a[comp] * w[row]).sum::<f64>()))
    };
    let to_b = |beta: &[f64]| -> Matrix {
        let mut b = Matrix::zeros(n, n);
        for (k, &(p, q)) in idx.iter().enumerate() {
            b[(p, q)] = beta[k];
            b[(q, p)] = beta[k];
        }
        b
    };

    let (c0, r0) = hull::chebyshev_center(normals, &offs)?;
    let mut x = Vector::zeros(np);
    for (k, &(p, q)) in idx.iter().enumerate() {
        if p == q {
            x[k] = 0.5 * r0;
        }
    }
    for i in 0..n {
        x[nk + i] = c0[i];
    }

    // barrier objective, or None outside the domain
    let phi = |x: &Vector, t: f64| -> Option<f64> {
        let b = to_b(&x.as_slice()[..nk]);
        let chol = b.clone().cholesky()?;
        let logdet: f64 = 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
        let c = x.rows(nk, n);
        let mut acc = -t * logdet;
        for (a, bi) in normals.iter().zip(&offs) {
            let s = bi - a.dot(&c) - (&b * a).norm();
            if !(s > 0.0) {
                return None;
            }
            acc -= s.ln();
        }
        Some(acc)
    };

    // start near the central path point whose gap matches the barrier weight
    let mut t = (m as f64 / nk as f64).max(1.0);
    let mut total_newton = 0;
    loop {
        for _ in 0..200 {
            total_newton += 1;
            let beta = &x.as_slice()[..nk];
            let b = to_b(beta);
            let c = x.rows(nk, n).into_owned();
            let binv = b.clone().try_inverse().ok_or(Error::Singular)?;
            let mut grad = Vector::zeros(np);
            let mut hess = Matrix::zeros(np, np);
            // -t log det B
            let xs: Vec<Matrix> = idx
                .iter()
                .map(|&(p, q)| {
                    let mut e = Matrix::zeros(n, n);
                    e[(p, q)] = 1.0;
                    e[(q, p)] = 1.0;
                    &binv * e
                })
                .collect();
            for k in 0..nk {
                grad[k] -= t * xs[k].trace();
                for l in k..nk {
                    let v = t * xs[k].component_mul(&xs[l].transpose()).sum();
                    hess[(k, l)] += v;
                    if l != k {
                        hess[(l, k)] += v;
                    }
                }
            }
            // Σ G^T G / (r s) is linear in Σ a a^T / (r s); the rank-one
            // terms are stacked and multiplied once
            let mut wsum = Matrix::zeros(n, n);
            let mut dm = Matrix::zeros(m, np);
            let mut gm = Matrix::zeros(m, nk);
            for (i, a) in normals.iter().enumerate() {
                let w = &b * a;
                let r = w.norm().max(1e-300);
                let s = offs[i] - a.dot(&c) - r;
                let gw = gt_times(a, &w) / r;
                for k in 0..nk {
                    dm[(i, k)] = -gw[k] / s;
                    gm[(i, k)] = gw[k] / (r * s).sqrt();
                }
                for j in 0..n {
                    dm[(i, nk + j)] = -a[j] / s;
                }
                for k in 0..nk {
                    grad[k] += gw[k] / s;
                }
                for j in 0..n {
                    grad[nk + j] += a[j] / s;
                }
                wsum.ger(1.0 / (r * s), a, a, 1.0);
            }
            hess += dm.transpose() * &dm;
            let mut sub = hess.view_mut((0, 0), (nk, nk));
            sub -= gm.transpose() * &gm;
            for (k, ck) in cols.iter().enumerate() {
                for (l, cl) in cols.iter().enumerate() {
                    let mut v = 0.0;
                    for &(r1, c1) in ck {
                        for &(r2, c2) in cl {
                            if r1 == r2 {
                                v += wsum[(c1, c2)];
                            }
                        }
                    }
                    sub[(k, l)] += v;
                }
            }
            let step = match hess.clone().cholesky() {
                Some(ch) => ch.solve(&(-&grad)),
                None => {
                    let reg = 1e-10 * hess.diagonal().amax().max(1e-300);
                    (hess.clone() + Matrix::identity(np, np) * reg)
                        .lu()
                        .solve(&(-&grad))
                        .ok_or(Error::Singular)?
                }
            };
            let decrement = -grad.dot(&step);
            if decrement < 1e-9 {
                break;
            }
            let f0 = phi(&x, t).ok_or_else(|| Error::Stall("john iterate left the domain".into()))?;
            let mut alpha = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let trial = &x + &step * alpha;
                if let Some(f1) = phi(&trial, t) {
                    if f1 <= f0 - 0.25 * alpha * decrement {
                        x = trial;
                        moved = true;
                        break;
                    }
                }
                alpha *= 0.5;
            }
            // at large t the objective is too big to resolve smaller gains
            if !moved || alpha < 1e-6 {
                break;
            }
        }
        if (m as f64) / t < 1e-9 {
            break;
        }
        t *= 20.0;
        if total_newton > 20_000 {
            return Err(Error::Stall("john ellipsoid barrier method".into()));
        }
    }
    let b = to_b(&x.as_slice()[..nk]) * scale;
    let c = x.rows(nk, n).into_owned() * scale;
    Ellipsoid::new(c, &b * &b)
}

/// Minimal-volume enclosing ellipsoid (Khachiyan iteration with
/// Todd–Yildirim away steps on the vertices).
pub fn loewner_ellipsoid(k: &ConvexBody) -> Result<Ellipsoid> {
    match k.shape() {
        Shape::Ellipsoid(e) => Ok(e.clone()),
        Shape::Cylinder(c) => {
            let n = k.dim();
            let kk = c.k() as f64;
            let mut d = Vector::from_element(n, if kk > 0.0 { ((kk + 1.0) / kk).sqrt() } else { 1.0 });
            d[n - 1] = c.half_height() * (kk + 1.0).sqrt();
            let l = c.map() * Matrix::from_diagonal(&d);
            Ellipsoid::new(Vector::zeros(n), &l * l.transpose())
        }
        Shape::Polytope(p) => khachiyan(p.vertices(), 1e-8),
    }
}

pub fn khachiyan(points: &[Vector], tol: f64) -> Result<Ellipsoid> {
    let n = points[0].len();
    let m = points.len();
    let d = (n + 1) as f64;
    let q: Vec<Vector> = points.iter().map(|p| p.clone().insert_row(n, 1.0)).collect();
    let mut u = vec![1.0 / m as f64; m];
    for _ in 0..200_000 {
        let mut x = Matrix::zeros(n + 1, n + 1);
        for (qi, ui) in q.iter().zip(&u) {
            x.ger(*ui, qi, qi, 1.0);
        }
        let chol = x.cholesky().ok_or_else(|| Error::DegenerateBody("points are not full-dimensional".into()))?;
        let mvals: Vec<f64> = q.iter().map(|qi| qi.dot(&chol.solve(qi))).collect();
        let (j, mj) = mvals.iter().copied().enumerate().max_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
        let (kk, mk) = mvals
            .iter()
            .copied()
            .enumerate()
            .filter(|(i, _)| u[*i] > 0.0)
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        let up = mj / d - 1.0;
        let down = 1.0 - mk / d;
        if up.max(down) <= tol {
            break;
        }
        if up >= down {
            let step = (mj - d) / (d * (mj - 1.0));
            u.iter_mut().for_each(|v| *v *= 1.0 - step);
            u[j] += step;
        } else {
            let mut step = (d - mk) / (d * (mk - 1.0));
            step = step.min(u[kk] / (1.0 - u[kk]));
            u.iter_mut().for_each(|v| *v *= 1.0 + step);
            u[kk] -= step;
            if u[kk] < 1e-300 {
                u[kk] = 0.0;
            }
        }
    }
    let c = points.iter().zip(&u).fold(Vector::zeros(n), |acc, (p, w)| acc + p * *w);
    let mut s = Matrix::zeros(n, n);
    for (p, w) in points.iter().zip(&u) {
        let dp = p - &c;
        s.ger(*w, &dp, &dp, 1.0);
    }
    let a = s * n as f64;
    let ainv = a.clone().try_inverse().ok_or(Error::Singular)?;
    let worst = points.iter().map(|p| (p - &c).dot(&(&ainv * (p - &c)))).fold(0.0, f64::max);
    Ellipsoid::new(c, a * worst)
}

/// Affine map sending the John ellipsoid of `k` onto the unit ball.
pub fn john_position(k: &ConvexBody) -> Result<AffinePosition> {
    let e = john_ellipsoid(k)?;
    ellipsoid_to_ball(&e)
}

pub fn ellipsoid_to_ball(e: &Ellipsoid) -> Result<AffinePosition> {
    let linv = e.factor().clone().try_inverse().ok_or(Error::Singular)?;
    let shift = -(&linv * e.center());
    AffinePosition::new(linv, shift)
}

/// Upper bound on the distance to the ball: circumradius over inradius of
/// the body in John position.
pub fn dk_estimate(k: &ConvexBody) -> Result<f64> {
    let pos = john_position(k)?;
    let kj = k.affine_image(&pos)?;
    let r = kj.interior_margin();
    if !(r > 0.0) {
        return Err(Error::NotInterior { margin: r });
    }
    Ok((kj.circumradius() / r).max(1.0))
}

/// Polar volume `vol((K - z)°)` for a polytope, with its gradient and Hessian.
pub struct PolarVolume<'a> {
    poly: &'a Polytope,
    lattice: FaceLattice,
}

impl<'a> PolarVolume<'a> {
    pub fn new(poly: &'a Polytope) -> Self {
        let lattice = FaceLattice::new(poly.dim(), poly.n_facets(), &poly.transposed_incidence());
        Self { poly, lattice }
    }

    fn polar_vertices(&self, z: &Vector) -> Option<Vec<Vector>> {
        self.poly
            .normals()
            .iter()
            .zip(self.poly.offsets())
            .map(|(a, b)| {
                let s = b - a.dot(z);
                if s > 0.0 {
                    Some(a / s)
                } else {
                    None
                }
            })
            .collect()
    }

    /// `None` when `z` is not interior.
    pub fn value(&self, z: &Vector) -> Option<f64> {
        Some(self.lattice.volume(&self.polar_vertices(z)?))
    }

    /// `(value, gradient, hessian)`.
    pub fn derivatives(&self, z: &Vector) -> Option<(f64, Vector, Matrix)> {
        let mo = self.lattice.moments(&self.polar_vertices(z)?);
        let n = self.poly.dim() as f64;
        Some((mo.volume, mo.first * (n + 1.0), mo.second * ((n + 1.0) * (n + 2.0))))
    }
}

/// Minimizer of `z -> vol((K - z)°)` (damped Newton).
pub fn santalo_point(k: &ConvexBody) -> Result<Vector> {
    match k.shape() {
        Shape::Ellipsoid(e) => Ok(e.center().clone()),
        Shape::Cylinder(_) => Ok(Vector::zeros(k.dim())),
        // the Santaló point is unique, so a symmetric body has it at 0
        Shape::Polytope(_) if k.is_symmetric() => Ok(Vector::zeros(k.dim())),
        Shape::Polytope(p) => {
            if p.dim() > 8 {
                return Err(Error::Unsupported("santalo point above dimension 8".into()));
            }
            let (z0, r) = hull::chebyshev_center(p.normals(), p.offsets())?;
            let pv = PolarVolume::new(p);
            let mut z = z0;
            let mut failures = 0;
            for _ in 0..200 {
                let (f, g, h) = pv.derivatives(&z).ok_or(Error::NotInterior { margin: 0.0 })?;
                let step = match h.clone().cholesky() {
                    Some(ch) => -ch.solve(&g),
                    None => -g.clone() * (r * r / f.max(1e-300)),
                };
                if step.norm() < 1e-10 * r {
                    break;
                }
                let mut alpha = 1.0;
                let mut accepted = false;
                for _ in 0..60 {
                    let trial = &z + &step * alpha;
                    let margin = p.normals().iter().zip(p.offsets()).map(|(a, b)| b - a.dot(&trial)).fold(f64::INFINITY, f64::min);
                    if margin > 1e-6 * r {
                        if let Some(f1) = pv.value(&trial) {
                            if f1 <= f + 1e-4 * alpha * g.dot(&step) || (alpha * step.norm() < 1e-8 * r && f1 <= f * (1.0 + 1e-13)) {
                                z = trial;
                                accepted = true;
                                break;
                            }
                        }
                    }
                    alpha *= 0.5;
                }
                if !accepted {
                    failures += 1;
                    if failures > 2 {
                        break;
                    }
                }
                if alpha * step.norm() < 1e-8 * r {
                    break;
                }
            }
            let margin = p.normals().iter().zip(p.offsets()).map(|(a, b)| b - a.dot(&z)).fold(f64::INFINITY, f64::min);
            if margin <= 0.0 {
                return Err(Error::NotInterior { margin });
            }
            Ok(z)
        }
    }
}

/// Checks that `z` beats the `2 dim` coordinate probes `z ± δ e_i` with
/// `δ = 1e-4 r` (`r` the inradius). Returns the smallest probe excess.
pub fn santalo_certificate(k: &ConvexBody, z: &Vector) -> Result<f64> {
    let p = k.require_polytope("santalo_certificate")?;
    let (_, r) = hull::chebyshev_center(p.normals(), p.offsets())?;
    let pv = PolarVolume::new(p);
    let f0 = pv.value(z).ok_or(Error::NotInterior { margin: 0.0 })?;
    let delta = 1e-4 * r;
    let mut worst = f64::INFINITY;
    for i in 0..k.dim() {
        for s in [1.0, -1.0] {
            let mut zz = z.clone();
            zz[i] += s * delta;
            let f = pv.value(&zz).ok_or(Error::NotInterior { margin: 0.0 })?;
            worst = worst.min(f - f0);
        }
    }
    Ok(worst)
}

/// Santaló point when available (polytopes up to dimension 8, ellipsoids,
/// cylinders), else the John center.
pub fn centering_point(k: &ConvexBody) -> Result<Vector> {
    match santalo_point(k) {
        Err(Error::Unsupported(_)) => Ok(john_ellipsoid(k)?.center().clone()),
        other => other,
    }
}

#[derive(Debug, Clone, Copy)]
pub struct MmstarOptions {
    /// Sphere points for the common-random-number objective.
    pub opt_samples: usize,
    /// Nelder–Mead evaluations per start.
    pub max_evals: usize,
}

impl Default for MmstarOptions {
    fn default() -> Self {
        Self { opt_samples: 2000, max_evals: 600 }
    }
}

fn traceless_from_params(n: usize, x: &[f64]) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    let mut it = x.iter();
    let mut tr = 0.0;
    for i in 0..n - 1 {
        let v = *it.next().unwrap();
        m[(i, i)] = v;
        tr += v;
    }
    m[(n - 1, n - 1)] = -tr;
    for i in 0..n {
        for j in i + 1..n {
            let v = *it.next().unwrap();
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}

fn params_from_traceless(m: &Matrix) -> Vec<f64> {
    let n = m.nrows();
    let mut x: Vec<f64> = (0..n - 1).map(|i| m[(i, i)]).collect();
    for i in 0..n {
        for j in i + 1..n {
            x.push(m[(i, j)]);
        }
    }
    x
}

/// Symmetric, determinant-one map `A^{-1/2}` normalized, as its traceless log.
fn whitening_log(shape: &Matrix) -> Matrix {
    let n = shape.nrows();
    let l = linalg::sym_log(shape) * -0.5;
    let tr = l.trace() / n as f64;
    l - Matrix::identity(n, n) * tr
}

fn product_on(b: &ConvexBody, t: &Matrix, cfg: &SamplerConfig) -> Option<(f64, f64)> {
    let tb = b.linear_image(t).ok()?;
    let e = estimate_many(b.dim(), Distribution::Sphere, cfg, 2, |x, o| {
        o[0] = tb.gauge(x);
        o[1] = tb.support(x);
    });
    let p = e[0].mean * e[1].mean;
    let se = p * ((e[0].stderr / e[0].mean).powi(2) + (e[1].stderr / e[1].mean).powi(2)).sqrt();
    Some((p, se))
}

/// Searches `T = exp(X)`, `X` symmetric traceless, minimizing `M(TB)·M*(TB)`.
pub fn mmstar_position(b: &ConvexBody, cfg: &SamplerConfig) -> Result<PositionResult> {
    mmstar_position_with(b, cfg, &MmstarOptions::default())
}

pub fn mmstar_position_with(b: &ConvexBody, cfg: &SamplerConfig, opts: &MmstarOptions) -> Result<PositionResult> {
    b.require_interior()?;
    if !b.is_symmetric() {
        return Err(Error::NotSymmetric);
    }
    let n = b.dim();
    let eye = Matrix::identity(n, n);
    let final_cfg = cfg.derive(0x5eed);
    if n == 1 {
        let (p, se) = product_on(b, &eye, &final_cfg).ok_or(Error::Singular)?;
        return Ok(PositionResult {
            position: AffinePosition::identity(1),
            objective: p,
            objective_stderr: se,
            iterations: 0,
            converged: true,
            seed: final_cfg.seed,
        });
    }
    let opt_cfg = cfg.derive(0x0b7).with_samples(opts.opt_samples);
    let objective = |x: &[f64]| -> f64 {
        let t = linalg::sym_exp(&traceless_from_params(n, x));
        product_on(b, &t, &opt_cfg).map(|v| v.0).unwrap_or(f64::INFINITY)
    };

    let mut starts = vec![Matrix::zeros(n, n)];
    if let Ok(j) = john_ellipsoid(b) {
        starts.push(whitening_log(j.shape()));
    }
    if let Ok(l) = loewner_ellipsoid(b) {
        starts.push(whitening_log(l.shape()));
    }
    let nm = NelderMead { max_evals: opts.max_evals, f_tol: 1e-9, x_tol: 1e-6, initial_step: 0.1 };
    let mut candidates = vec![eye.clone()];
    let mut evals = 0;
    let mut converged = true;
    for s in &starts {
        let x0 = params_from_traceless(s);
        candidates.push(linalg::sym_exp(s));
        let res = nm.minimize(objective, &x0);
        evals += res.evals;
        converged &= res.converged;
        candidates.push(linalg::sym_exp(&traceless_from_params(n, &res.x)));
    }
    // fresh samples for the reported value
    let mut best: Option<(Matrix, f64, f64)> = None;
    for t in candidates {
        if let Some((p, se)) = product_on(b, &t, &final_cfg) {
            if best.as_ref().map_or(true, |bb| p < bb.1) {
                best = Some((t, p, se));
            }
        }
    }
    let (t, p, se) = best.ok_or(Error::Singular)?;
    Ok(PositionResult {
        position: AffinePosition::linear(t)?,
        objective: p,
        objective_stderr: se,
        iterations: evals,
        converged,
        seed: final_cfg.seed,
    })
}

/// Ellipsoid candidate and its four normalized volume ratios:
/// `K` vs `E`, `K°` vs `E°`, `conv(K, -K)` vs `K ∩ -K`, and `K ∩ -K` vs `E`.
#[derive(Debug, Clone)]
pub struct MEllipsoid {
    pub ellipsoid: Ellipsoid,
    pub center: Vector,
    pub ratios: [f64; 4],
}

pub fn m_ellipsoid_candidate(k: &ConvexBody, cfg: &SamplerConfig) -> Result<MEllipsoid> {
    if let Shape::Ellipsoid(e) = k.shape() {
        return Ok(MEllipsoid { ellipsoid: e.clone(), center: e.center().clone(), ratios: [1.0; 4] });
    }
    let p = k.require_polytope("m_ellipsoid_candidate")?;
    let n = p.dim();
    if n > 8 {
        return Err(Error::Unsupported("m_ellipsoid_candidate above dimension 8".into()));
    }
    let z = santalo_point(k)?;
    let k0 = k.shifted(&z)?;
    let d = k0.central_intersection()?;
    let pos = mmstar_position(&d, &cfg.derive(1))?;
    let t = pos.position.linear.clone();
    let vol_d = d.volume()?;
    let rho = (vol_d / linalg::unit_ball_volume(n)).powf(1.0 / n as f64);
    let ratio_cfg = cfg.derive(2);

    let kw = k0.linear_image(&t)?;
    let dw = d.linear_image(&t)?;
    let kw_polar = kw.polar()?;
    let r1 = sum_to_cap_ratio(&kw, rho, &ratio_cfg)?;
    let r2 = sum_to_cap_ratio(&kw_polar, 1.0 / rho, &ratio_cfg.derive(3))?;
    let r3 = (k0.conv_union_reflection()?.volume()? / vol_d).powf(1.0 / n as f64);
    let r4 = sum_to_cap_ratio(&dw, rho, &ratio_cfg.derive(4))?;

    let tinv = t.try_inverse().ok_or(Error::Singular)?;
    let shape = &tinv * tinv.transpose() * (rho * rho);
    let ellipsoid = Ellipsoid::new(z.clone(), shape)?;
    Ok(MEllipsoid { ellipsoid, center: z, ratios: [r1, r2, r3, r4] })
}

/// `(vol(P + ρB) / vol(P ∩ ρB))^{1/n}` by Monte Carlo.
fn sum_to_cap_ratio(pb: &ConvexBody, rho: f64, cfg: &SamplerConfig) -> Result<f64> {
    let p = pb.require_polytope("volume ratio")?;
    let n = p.dim();
    let verts = p.vertices();
    let outer = pb.circumradius() + rho;
    let sum = estimate_mean(n, Distribution::Ball, cfg, |y| {
        let x = Vector::from_iterator(n, y.iter().map(|v| v * outer));
        if pb.contains(x.as_slice(), 0.0) || x.norm() <= rho {
            1.0
        } else {
            (minnorm::distance_to_hull(verts, &x) <= rho) as u8 as f64
        }
    });
    let cap = estimate_mean(n, Distribution::Ball, cfg, |y| {
        let x: Vec<f64> = y.iter().map(|v| v * rho).collect();
        pb.contains(&x, 0.0) as u8 as f64
    });
    if cap.mean <= 0.0 {
        return Err(Error::DegenerateBody("empty intersection with the ellipsoid".into()));
    }
    let ratio = sum.mean * outer.powi(n as i32) / (cap.mean * rho.powi(n as i32));
    Ok(ratio.powf(1.0 / n as f64))
}
