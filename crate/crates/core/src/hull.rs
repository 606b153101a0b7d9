//! Facet/vertex enumeration by the double description method.
//!
//! Both directions reduce to enumerating the vertices of `{x : <r_i, x> <= 1}`
//! (a bounded polytope with 0 in its interior), i.e. the extreme rays of the
//! cone `{(x, s) : <r_i, x> - s <= 0}`.

use crate::error::{Error, Result};
use crate::linalg::{affine_rank, rank_of, Matrix, Vector};
use crate::lp::{LinearProgram, VarBound};
use fixedbitset::FixedBitSet;

const ZERO_TOL: f64 = 1e-9;

/// Vertices, unit-normal facets `<a, x> <= b` and the facet -> vertex incidence.
#[derive(Debug, Clone)]
pub struct HullData {
    pub vertices: Vec<Vector>,
    pub normals: Vec<Vector>,
    pub offsets: Vec<f64>,
    pub incidence: Vec<FixedBitSet>,
}

struct Ray {
    y: Vec<f64>,
    zeros: FixedBitSet,
}

fn normalize(v: &mut [f64]) {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 0.0 {
        v.iter_mut().for_each(|x| *x /= n);
    }
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Extreme rays of the pointed cone `{y : <h_i, y> <= 0}`, rows visited in `order`.
fn double_description(rows: &[Vec<f64>], order: &[usize]) -> Result<Vec<Ray>> {
    let m = rows.len();
    let d = rows[0].len();
    let mut init = Vec::with_capacity(d);
    let mut basis: Vec<Vector> = Vec::with_capacity(d);
    for &i in order {
        if init.len() == d {
            break;
        }
        let mut w = Vector::from_column_slice(&rows[i]);
        for _ in 0..2 {
            for b in &basis {
                let c = b.dot(&w);
                w.axpy(-c, b, 1.0);
            }
        }
        let nw = w.norm();
        if nw > 1e-9 {
            basis.push(w / nw);
            init.push(i);
        }
    }
    if init.len() < d {
        return Err(Error::DegenerateBody(
            "constraint system does not define a full-dimensional bounded body".into(),
        ));
    }
    let a = Matrix::from_fn(d, d, |r, c| rows[init[r]][c]);
    let inv = a.try_inverse().ok_or(Error::Singular)?;
    let mut rays: Vec<Ray> = (0..d)
        .map(|j| {
            let mut y: Vec<f64> = (0..d).map(|r| -inv[(r, j)]).collect();
            normalize(&mut y);
            let mut zeros = FixedBitSet::with_capacity(m);
            for (k, &i) in init.iter().enumerate() {
                if k != j {
                    zeros.insert(i);
                }
            }
            Ray { y, zeros }
        })
        .collect();
    let mut done = FixedBitSet::with_capacity(m);
    init.iter().for_each(|&i| done.insert(i));

    for &i in order {
        if done.contains(i) {
            continue;
        }
        done.insert(i);
        let h = &rows[i];
        let vals: Vec<f64> = rays.iter().map(|r| dotv(h, &r.y)).collect();
        let pos: Vec<usize> = (0..rays.len()).filter(|&k| vals[k] > ZERO_TOL).collect();
        if pos.is_empty() {
            for (k, r) in rays.iter_mut().enumerate() {
                if vals[k].abs() <= ZERO_TOL {
                    r.zeros.insert(i);
                }
            }
            continue;
        }
        let neg: Vec<usize> = (0..rays.len()).filter(|&k| vals[k] < -ZERO_TOL).collect();
        let mut fresh = Vec::new();
        for &p in &pos {
            for &q in &neg {
                let mut z = rays[p].zeros.clone();
                z.intersect_with(&rays[q].zeros);
                if z.count_ones(..) + 2 < d {
                    continue;
                }
                let zrows: Vec<Vector> = z.ones().map(|k| Vector::from_column_slice(&rows[k])).collect();
                if rank_of(&zrows, 1e-7) != d - 2 {
                    continue;
                }
                let (vp, vq) = (vals[p], vals[q]);
                let mut y: Vec<f64> =
                    rays[q].y.iter().zip(&rays[p].y).map(|(yq, yp)| vp * yq - vq * yp).collect();
                normalize(&mut y);
                z.insert(i);
                fresh.push(Ray { y, zeros: z });
            }
        }
        let mut kept = Vec::with_capacity(rays.len() - pos.len() + fresh.len());
        for (k, mut r) in rays.into_iter().enumerate() {
            if vals[k] > ZERO_TOL {
                continue;
            }
            if vals[k] >= -ZERO_TOL {
                r.zeros.insert(i);
            }
            kept.push(r);
        }
        kept.extend(fresh);
        rays = kept;
    }
    Ok(rays)
}

/// Vertices of `{x : <r_i, x> <= 1}`; returns (vertices, row -> incident vertex sets per vertex).
fn enumerate_unit_system(rows: &[Vector]) -> Result<(Vec<Vector>, Vec<FixedBitSet>)> {
    let d = rows[0].len();
    let hom: Vec<Vec<f64>> = rows
        .iter()
        .map(|r| {
            let mut h: Vec<f64> = r.iter().copied().collect();
            h.push(-1.0);
            normalize(&mut h);
            h
        })
        .collect();
    let mut order: Vec<usize> = (0..rows.len()).collect();
    // Rows with the largest norm cut closest to the origin; inserting them first
    // keeps the intermediate cones small.
    order.sort_by(|&a, &b| rows[b].norm().total_cmp(&rows[a].norm()).then(a.cmp(&b)));
    let rays = double_description(&hom, &order)?;
    let mut verts = Vec::with_capacity(rays.len());
    let mut zeros = Vec::with_capacity(rays.len());
    for r in rays {
        let s = r.y[d];
        if s <= 1e-12 {
            return Err(Error::DegenerateBody("polyhedron is unbounded".into()));
        }
        verts.push(Vector::from_iterator(d, r.y[..d].iter().map(|x| x / s)));
        zeros.push(r.zeros);
    }
    Ok((verts, zeros))
}

/// Removes duplicate points (relative tolerance) and returns the survivors.
pub fn dedup_points(points: &[Vector]) -> Vec<Vector> {
    let scale = points.iter().map(|p| p.amax()).fold(0.0, f64::max).max(1e-300);
    let mut out: Vec<Vector> = Vec::with_capacity(points.len());
    for p in points {
        if !out.iter().any(|q| (p - q).amax() <= 1e-11 * scale) {
            out.push(p.clone());
        }
    }
    out
}

/// Convex hull of a point cloud (V -> H).
pub fn hull_of_points(points: &[Vector]) -> Result<HullData> {
    if points.is_empty() {
        return Err(Error::DegenerateBody("no points".into()));
    }
    let d = points[0].len();
    let pts = dedup_points(points);
    if pts.len() <= d || affine_rank(&pts, 1e-10) < d {
        return Err(Error::DegenerateBody(format!(
            "affine hull of the points has dimension below {d}"
        )));
    }
    let centroid = pts.iter().fold(Vector::zeros(d), |acc, p| acc + p) / pts.len() as f64;
    let rows: Vec<Vector> = pts.iter().map(|p| p - &centroid).collect();
    let (polar_verts, zeros) = enumerate_unit_system(&rows)?;

    let mut normals = Vec::with_capacity(polar_verts.len());
    let mut offsets = Vec::with_capacity(polar_verts.len());
    for y in &polar_verts {
        let ny = y.norm();
        let a = y / ny;
        offsets.push(1.0 / ny + a.dot(&centroid));
        normals.push(a);
    }
    // A listed point is a vertex iff the facets through it pin it down.
    let mut keep = Vec::new();
    for i in 0..pts.len() {
        let through: Vec<Vector> =
            zeros.iter().enumerate().filter(|(_, z)| z.contains(i)).map(|(f, _)| normals[f].clone()).collect();
        if through.len() >= d && rank_of(&through, 1e-7) == d {
            keep.push(i);
        }
    }
    let vertices: Vec<Vector> = keep.iter().map(|&i| pts[i].clone()).collect();
    let incidence = zeros
        .iter()
        .map(|z| {
            let mut b = FixedBitSet::with_capacity(keep.len());
            for (new, &old) in keep.iter().enumerate() {
                if z.contains(old) {
                    b.insert(new);
                }
            }
            b
        })
        .collect();
    Ok(HullData { vertices, normals, offsets, incidence })
}

/// Chebyshev center of `{<a_i,x> <= b_i}` with unit normals: (center, radius).
pub fn chebyshev_center(normals: &[Vector], offsets: &[f64]) -> Result<(Vector, f64)> {
    let d = normals[0].len();
    let mut obj = vec![0.0; d + 1];
    obj[d] = 1.0;
    let mut bounds = vec![VarBound::Free; d];
    bounds.push(VarBound::NonNegative);
    let mut lp = LinearProgram::new(obj, bounds);
    for (a, &b) in normals.iter().zip(offsets) {
        let mut row: Vec<f64> = a.iter().copied().collect();
        row.push(a.norm());
        lp.le(row, b);
    }
    match lp.solve() {
        Ok(s) => Ok((Vector::from_column_slice(&s.x[..d]), s.x[d])),
        Err(Error::Lp("infeasible")) => Err(Error::DegenerateBody("halfspaces have empty intersection".into())),
        Err(Error::Lp("unbounded")) => Err(Error::DegenerateBody("polyhedron is unbounded".into())),
        Err(e) => Err(e),
    }
}

/// Vertex enumeration of `{<a_i,x> <= b_i}` (H -> V); redundant rows are dropped.
pub fn vertices_of_halfspaces(normals: &[Vector], offsets: &[f64]) -> Result<HullData> {
    if normals.is_empty() {
        return Err(Error::DegenerateBody("no halfspaces".into()));
    }
    let d = normals[0].len();
    let mut a_unit = Vec::with_capacity(normals.len());
    let mut b_unit = Vec::with_capacity(normals.len());
    for (a, &b) in normals.iter().zip(offsets) {
        let n = a.norm();
        if n == 0.0 {
            if b < 0.0 {
                return Err(Error::DegenerateBody("halfspaces have empty intersection".into()));
            }
            continue;
        }
        a_unit.push(a / n);
        b_unit.push(b / n);
    }
    let (z, r) = chebyshev_center(&a_unit, &b_unit)?;
    let scale = 1.0 + z.amax() + b_unit.iter().fold(0.0f64, |m, b| m.max(b.abs()));
    if r <= 1e-9 * scale {
        return Err(Error::DegenerateBody("halfspaces do not enclose a full-dimensional body".into()));
    }
    let rows: Vec<Vector> = a_unit.iter().zip(&b_unit).map(|(a, b)| a / (b - a.dot(&z))).collect();
    let (local, zeros) = enumerate_unit_system(&rows)?;
    let vertices: Vec<Vector> = local.iter().map(|v| v + &z).collect();

    // Row -> tight vertices; keep rows whose tight set spans a hyperplane, once each.
    let nv = vertices.len();
    let mut tight: Vec<FixedBitSet> = vec![FixedBitSet::with_capacity(nv); rows.len()];
    for (j, zj) in zeros.iter().enumerate() {
        for i in zj.ones() {
            tight[i].insert(j);
        }
    }
    let mut normals_out = Vec::new();
    let mut offsets_out = Vec::new();
    let mut incidence: Vec<FixedBitSet> = Vec::new();
    for i in 0..rows.len() {
        let t = &tight[i];
        if t.count_ones(..) < d || incidence.iter().any(|s| s == t) {
            continue;
        }
        let pts: Vec<Vector> = t.ones().map(|j| vertices[j].clone()).collect();
        if affine_rank(&pts, 1e-9) != d - 1 {
            continue;
        }
        normals_out.push(a_unit[i].clone());
        offsets_out.push(b_unit[i]);
        incidence.push(t.clone());
    }
    Ok(HullData { vertices, normals: normals_out, offsets: offsets_out, incidence })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    #[test]
    fn square_from_points_with_interior_and_edge_points() {
        let pts = vec![
            v(&[1.0, 1.0]),
            v(&[-1.0, 1.0]),
            v(&[1.0, -1.0]),
            v(&[-1.0, -1.0]),
            v(&[0.0, 0.0]),
            v(&[1.0, 0.0]),
            v(&[1.0, 1.0]),
        ];
        let h = hull_of_points(&pts).unwrap();
        assert_eq!(h.vertices.len(), 4);
        assert_eq!(h.normals.len(), 4);
        for (a, b) in h.normals.iter().zip(&h.offsets) {
            assert!((b - 1.0).abs() < 1e-12);
            assert!((a.amax() - 1.0).abs() < 1e-12);
        }
        for inc in &h.incidence {
            assert_eq!(inc.count_ones(..), 2);
        }
    }

    #[test]
    fn cube_halfspaces_give_corners() {
        for d in 1..=5 {
            let mut normals = Vec::new();
            let mut offsets = Vec::new();
            for i in 0..d {
                for s in [1.0, -1.0] {
                    let mut a = Vector::zeros(d);
                    a[i] = s;
                    normals.push(a);
                    offsets.push(1.0);
                }
            }
            // redundant copy and a redundant loose row
            normals.push(normals[0].clone() * 2.0);
            offsets.push(2.0);
            normals.push(normals[0].clone());
            offsets.push(5.0);
            let h = vertices_of_halfspaces(&normals, &offsets).unwrap();
            assert_eq!(h.vertices.len(), 1 << d);
            assert_eq!(h.normals.len(), 2 * d);
            for inc in &h.incidence {
                assert_eq!(inc.count_ones(..), 1 << (d - 1));
            }
        }
    }

    #[test]
    fn rejects_flat_and_unbounded() {
        let pts = vec![v(&[0.0, 0.0, 0.0]), v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0]), v(&[1.0, 1.0, 0.0])];
        assert!(matches!(hull_of_points(&pts), Err(Error::DegenerateBody(_))));
        let normals = vec![v(&[1.0, 0.0]), v(&[-1.0, 0.0]), v(&[0.0, 1.0])];
        assert!(matches!(vertices_of_halfspaces(&normals, &[1.0, 1.0, 1.0]), Err(Error::DegenerateBody(_))));
    }
}
