//! Wolfe's algorithm for the minimum-norm point of a polytope given by points.

use crate::linalg::{Matrix, Vector};

/// Point of `conv(points)` closest to the origin, with its convex weights.
pub fn min_norm_point(points: &[Vector]) -> (Vector, Vec<f64>) {
    let m = points.len();
    assert!(m > 0, "min_norm_point needs at least one point");
    let scale = points.iter().map(|p| p.norm_squared()).fold(0.0, f64::max).max(1e-300);
    let tol = 1e-12 * scale;

    let start = (0..m).min_by(|&a, &b| points[a].norm_squared().total_cmp(&points[b].norm_squared())).unwrap();
    let mut corral: Vec<usize> = vec![start];
    let mut lambda: Vec<f64> = vec![1.0];
    let mut x = points[start].clone();

    for _major in 0..(50 * m + 100) {
        let (j, pj) = (0..m)
            .map(|j| (j, points[j].dot(&x)))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        if x.norm_squared() - pj <= tol || corral.contains(&j) {
            break;
        }
        corral.push(j);
        lambda.push(0.0);
        loop {
            let alpha = match affine_minimizer(points, &corral) {
                Some(a) => a,
                None => {
                    // dependent corral: drop the newest point
                    corral.pop();
                    lambda.pop();
                    break;
                }
            };
            if alpha.iter().all(|&a| a > 1e-15) {
                lambda = alpha;
                break;
            }
            let mut theta = 1.0f64;
            for (l, a) in lambda.iter().zip(&alpha) {
                if *a <= 1e-15 {
                    let t = l / (l - a);
                    if t < theta {
                        theta = t;
                    }
                }
            }
            for (l, a) in lambda.iter_mut().zip(&alpha) {
                *l = theta * a + (1.0 - theta) * *l;
            }
            let keep: Vec<bool> = lambda.iter().map(|&l| l > 1e-15).collect();
            corral = corral.iter().zip(&keep).filter(|(_, &k)| k).map(|(&c, _)| c).collect();
            lambda = lambda.iter().zip(&keep).filter(|(_, &k)| k).map(|(&l, _)| l).collect();
            let s: f64 = lambda.iter().sum();
            lambda.iter_mut().for_each(|l| *l /= s);
        }
        x = corral.iter().zip(&lambda).fold(Vector::zeros(points[0].len()), |acc, (&c, &l)| acc + &points[c] * l);
    }
    let mut w = vec![0.0; m];
    for (&c, &l) in corral.iter().zip(&lambda) {
        w[c] = l;
    }
    (x, w)
}

fn affine_minimizer(points: &[Vector], corral: &[usize]) -> Option<Vec<f64>> {
    let k = corral.len();
    let mut a = Matrix::zeros(k + 1, k + 1);
    let mut rhs = Vector::zeros(k + 1);
    for i in 0..k {
        for j in 0..k {
            a[(i, j)] = points[corral[i]].dot(&points[corral[j]]);
        }
        a[(i, k)] = 1.0;
        a[(k, i)] = 1.0;
    }
    rhs[k] = 1.0;
    let sol = a.lu().solve(&rhs)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(sol.iter().take(k).copied().collect())
}

/// Euclidean distance from `x` to `conv(points)`.
pub fn distance_to_hull(points: &[Vector], x: &Vector) -> f64 {
    let shifted: Vec<Vector> = points.iter().map(|p| p - x).collect();
    min_norm_point(&shifted).0.norm()
}
