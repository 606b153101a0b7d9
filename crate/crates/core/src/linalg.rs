//! Small dense linear-algebra helpers on top of `nalgebra`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Twice-iterated Gram–Schmidt. Vectors whose residual is below `tol` times
/// their original norm are dropped.
pub fn orthonormalize(vectors: &[Vector], tol: f64) -> Vec<Vector> {
    let mut basis: Vec<Vector> = Vec::new();
    for v in vectors {
        let norm0 = v.norm();
        if norm0 == 0.0 {
            continue;
        }
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let norm = w.norm();
        if norm > tol * norm0 {
            basis.push(w / norm);
        }
    }
    basis
}

/// Orthonormal basis of the orthogonal complement of span(`basis`) in R^dim.
pub fn orthogonal_complement(basis: &[Vector], dim: usize) -> Vec<Vector> {
    let mut all: Vec<Vector> = basis.to_vec();
    for i in 0..dim {
        all.push(Vector::from_fn(dim, |j, _| if i == j { 1.0 } else { 0.0 }));
    }
    let full = orthonormalize(&all, 1e-8);
    full[basis.len().min(full.len())..].to_vec()
}

/// Dimension of the affine hull of `points`, relative tolerance `tol`.
pub fn affine_rank(points: &[Vector], tol: f64) -> usize {
    if points.len() <= 1 {
        return 0;
    }
    let diffs: Vec<Vector> = points[1..].iter().map(|p| p - &points[0]).collect();
    let scale = diffs.iter().map(|d| d.norm()).fold(0.0, f64::max);
    if scale == 0.0 {
        return 0;
    }
    let scaled: Vec<Vector> = diffs.iter().map(|d| d / scale).collect();
    rank_of(&scaled, tol)
}

/// Numerical rank of a list of vectors (absolute tolerance on residual norms).
pub fn rank_of(vectors: &[Vector], tol: f64) -> usize {
    let mut basis: Vec<Vector> = Vec::new();
    for v in vectors {
        let mut w = v.clone();
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let n = w.norm();
        if n > tol {
            basis.push(w / n);
        }
    }
    basis.len()
}

pub fn symmetrize(m: &Matrix) -> Matrix {
    (m + m.transpose()) * 0.5
}

/// Applies a scalar function to the spectrum of a symmetric matrix.
pub fn sym_apply(m: &Matrix, f: impl Fn(f64) -> f64) -> Matrix {
    let eig = SymmetricEigen::new(symmetrize(m));
    let d = eig.eigenvalues.map(f);
    &eig.eigenvectors * Matrix::from_diagonal(&d) * eig.eigenvectors.transpose()
}

pub fn sym_exp(m: &Matrix) -> Matrix {
    sym_apply(m, f64::exp)
}

pub fn sym_log(m: &Matrix) -> Matrix {
    sym_apply(m, f64::ln)
}

pub fn sym_sqrt(m: &Matrix) -> Matrix {
    sym_apply(m, |x| x.max(0.0).sqrt())
}

pub fn sym_inv_sqrt(m: &Matrix) -> Matrix {
    sym_apply(m, |x| 1.0 / x.sqrt())
}

/// Eigenvalues (ascending) with matching eigenvectors as columns.
pub fn sym_eigen_sorted(m: &Matrix) -> (Vec<f64>, Matrix) {
    let eig = SymmetricEigen::new(symmetrize(m));
    let n = eig.eigenvalues.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = Matrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

pub fn identity(n: usize) -> Matrix {
    Matrix::identity(n, n)
}

/// Volume of the Euclidean unit ball in R^n.
pub fn unit_ball_volume(n: usize) -> f64 {
    let nf = n as f64;
    (0.5 * nf * std::f64::consts::PI.ln() - ln_gamma(0.5 * nf + 1.0)).exp()
}

/// E|g| for a standard Gaussian vector in R^n: √2·Γ((n+1)/2)/Γ(n/2).
pub fn expected_chi(n: usize) -> f64 {
    let nf = n as f64;
    std::f64::consts::SQRT_2 * (ln_gamma(0.5 * (nf + 1.0)) - ln_gamma(0.5 * nf)).exp()
}

/// β_n = √n·Γ(n/2)/(√2·Γ((n+1)/2)), so that ℓ(K) = √n·M(K)/β_n.
pub fn beta_n(n: usize) -> f64 {
    (n as f64).sqrt() / expected_chi(n)
}

pub fn binomial(n: u64, k: u64) -> f64 {
    let mut r = 1.0;
    for i in 0..k {
        r *= (n - i) as f64 / (i + 1) as f64;
    }
    r
}

pub fn factorial(n: u64) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Operator norm (largest singular value).
pub fn op_norm(m: &Matrix) -> f64 {
    m.clone().svd(false, false).singular_values.max()
}

/// `max |c + L v|` over `|v| <= 1` (trust-region secular equation).
pub fn max_norm_on_ellipsoid(c: &Vector, l: &Matrix) -> f64 {
    let (lam, q) = sym_eigen_sorted(&(l.transpose() * l));
    let b = q.transpose() * (l.transpose() * c);
    let n = lam.len();
    let top = lam[n - 1];
    let scale = top.max(1e-300);
    let norm_sq = |mu: f64| -> f64 { (0..n).map(|i| (b[i] / (mu - lam[i])).powi(2)).sum() };
    let hard = b[n - 1].abs() <= 1e-12 * (b.amax() + scale.sqrt())
        && (0..n).filter(|&i| lam[i] < top * (1.0 - 1e-12)).map(|i| (b[i] / (top - lam[i])).powi(2)).sum::<f64>() <= 1.0;
    let mut v = vec![0.0; n];
    if hard || b.amax() == 0.0 {
        let mut rest = 1.0;
        for i in 0..n {
            if lam[i] < top * (1.0 - 1e-12) {
                v[i] = b[i] / (top - lam[i]);
                rest -= v[i] * v[i];
            }
        }
        // leftover mass goes to the top eigenspace
        let k = (0..n).filter(|&i| lam[i] >= top * (1.0 - 1e-12)).count() as f64;
        for i in 0..n {
            if lam[i] >= top * (1.0 - 1e-12) {
                v[i] = (rest.max(0.0) / k).sqrt() * if b[i] < 0.0 { -1.0 } else { 1.0 };
            }
        }
    } else {
        let (mut lo, mut hi) = (top, top + b.norm() + scale);
        while norm_sq(hi) > 1.0 {
            hi = top + 2.0 * (hi - top);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if norm_sq(mid) > 1.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        for i in 0..n {
            v[i] = b[i] / (hi - lam[i]);
        }
    }
    let val: f64 = c.norm_squared() + 2.0 * (0..n).map(|i| b[i] * v[i]).sum::<f64>() + (0..n).map(|i| lam[i] * v[i] * v[i]).sum::<f64>();
    val.max(0.0).sqrt()
}

pub fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Serde adapters: matrices as row-major nested arrays, vectors as arrays.
pub mod serde_rows {
    use super::Matrix;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(m: &Matrix, s: S) -> Result<S::Ok, S::Error> {
        let rows: Vec<Vec<f64>> = (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect();
        rows.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Matrix, D::Error> {
        let rows: Vec<Vec<f64>> = Vec::deserialize(d)?;
        let n = rows.len();
        let k = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != k) {
            return Err(serde::de::Error::custom("ragged matrix"));
        }
        Ok(Matrix::from_fn(n, k, |i, j| rows[i][j]))
    }
}

pub mod serde_vec {
    use super::Vector;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &Vector, s: S) -> Result<S::Ok, S::Error> {
        v.as_slice().serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vector, D::Error> {
        Ok(Vector::from_vec(Vec::deserialize(d)?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn chi_mean_matches_known_values() {
        assert_relative_eq!(expected_chi(1), (2.0 / std::f64::consts::PI).sqrt(), epsilon = 1e-13);
        assert_relative_eq!(expected_chi(2), (std::f64::consts::PI / 2.0).sqrt(), epsilon = 1e-13);
        assert_relative_eq!(expected_chi(3), 2.0 * (2.0 / std::f64::consts::PI).sqrt(), epsilon = 1e-13);
    }

    #[test]
    fn ball_volumes() {
        assert_relative_eq!(unit_ball_volume(2), std::f64::consts::PI, epsilon = 1e-13);
        assert_relative_eq!(unit_ball_volume(3), 4.0 / 3.0 * std::f64::consts::PI, epsilon = 1e-13);
    }

    #[test]
    fn complement_is_orthonormal() {
        let b = orthonormalize(&[Vector::from_vec(vec![1.0, 1.0, 0.0])], 1e-12);
        let c = orthogonal_complement(&b, 3);
        assert_eq!(c.len(), 2);
        for v in &c {
            assert!(v.dot(&b[0]).abs() < 1e-12);
            assert_relative_eq!(v.norm(), 1.0, epsilon = 1e-12);
        }
        assert!(c[0].dot(&c[1]).abs() < 1e-12);
    }

    #[test]
    fn sym_exp_log_roundtrip() {
        let m = Matrix::from_row_slice(2, 2, &[2.0, 0.5, 0.5, 1.0]);
        let back = sym_exp(&sym_log(&m));
        assert_relative_eq!(back, m, epsilon = 1e-12);
    }
    #[test]
    fn ellipsoid_max_norm() {
        let l = Matrix::from_diagonal(&Vector::from_column_slice(&[2.0, 1.0]));
        assert!((max_norm_on_ellipsoid(&Vector::zeros(2), &l) - 2.0).abs() < 1e-12);
        let c = Vector::from_column_slice(&[0.5, 0.0]);
        assert!((max_norm_on_ellipsoid(&c, &l) - 2.5).abs() < 1e-9);
        // brute force on a rotated, shifted ellipse
        let l = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.7, 0.4]);
        let c = Vector::from_column_slice(&[0.1, -0.3]);
        let brute = (0..200000)
            .map(|k| {
                let t = k as f64 * std::f64::consts::TAU / 200000.0;
                (&c + &l * Vector::from_column_slice(&[t.cos(), t.sin()])).norm()
            })
            .fold(0.0, f64::max);
        assert!((max_norm_on_ellipsoid(&c, &l) - brute).abs() < 1e-8);
    }
}
