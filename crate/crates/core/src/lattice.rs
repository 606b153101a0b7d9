//! Face lattice of a polytope and exact volume / moment integrals over it.
//!
//! Every face is split into cones from its vertex centroid over its facets,
//! recursively down to the vertices, so the volume of a k-face is
//! `sum_G dist(c_F, aff G) * vol(G) / k`.

use crate::linalg::{Matrix, Vector};
use fixedbitset::FixedBitSet;
use std::collections::HashMap;

#[derive(Debug, Clone)]
struct Face {
    verts: Vec<usize>,
    children: Vec<usize>,
}

/// Combinatorial face lattice; `levels[k]` holds the k-dimensional faces.
#[derive(Debug, Clone)]
pub struct FaceLattice {
    dim: usize,
    faces: Vec<Face>,
    levels: Vec<Vec<usize>>,
    top: usize,
}

/// Volume, first moment `int y dy` and second moment `int y y^T dy`.
#[derive(Debug, Clone)]
pub struct Moments {
    pub volume: f64,
    pub first: Vector,
    pub second: Matrix,
}

impl FaceLattice {
    /// `facets[i]` is the set of vertex indices lying on facet i.
    pub fn new(dim: usize, n_vertices: usize, facets: &[FixedBitSet]) -> Self {
        let mut faces: Vec<Face> = Vec::new();
        let mut index: HashMap<FixedBitSet, usize> = HashMap::new();
        let mut levels: Vec<Vec<usize>> = vec![Vec::new(); dim + 1];

        let mut all = FixedBitSet::with_capacity(n_vertices);
        all.insert_range(..);
        faces.push(Face { verts: all.ones().collect(), children: Vec::new() });
        let top = 0;
        levels[dim].push(top);
        let mut bits: Vec<FixedBitSet> = vec![all];

        for k in (1..=dim).rev() {
            let current = levels[k].clone();
            for f in current {
                let fb = bits[f].clone();
                let fcount = fb.count_ones(..);
                let mut cands: Vec<FixedBitSet> = Vec::new();
                for g in facets {
                    let mut c = fb.clone();
                    c.intersect_with(g);
                    let cnt = c.count_ones(..);
                    if cnt == 0 || cnt == fcount || cands.contains(&c) {
                        continue;
                    }
                    cands.push(c);
                }
                cands.sort_by_key(|c| std::cmp::Reverse(c.count_ones(..)));
                let mut kept: Vec<FixedBitSet> = Vec::new();
                for c in cands {
                    if !kept.iter().any(|k| c.is_subset(k)) {
                        kept.push(c);
                    }
                }
                let mut children = Vec::with_capacity(kept.len());
                for c in kept {
                    let id = match index.get(&c) {
                        Some(&id) => id,
                        None => {
                            let id = faces.len();
                            faces.push(Face { verts: c.ones().collect(), children: Vec::new() });
                            bits.push(c.clone());
                            index.insert(c, id);
                            levels[k - 1].push(id);
                            id
                        }
                    };
                    children.push(id);
                }
                faces[f].children = children;
            }
        }
        Self { dim, faces, levels, top }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_faces(&self, k: usize) -> usize {
        self.levels[k].len()
    }

    /// Exact volume of the polytope with the given vertex coordinates.
    pub fn volume(&self, coords: &[Vector]) -> f64 {
        self.integrate(coords, false).volume
    }

    pub fn moments(&self, coords: &[Vector]) -> Moments {
        self.integrate(coords, true)
    }

    fn integrate(&self, coords: &[Vector], second: bool) -> Moments {
        let n = coords[0].len();
        let nf = self.faces.len();
        let mut vol = vec![0.0; nf];
        let mut m1: Vec<Vector> = vec![Vector::zeros(0); nf];
        let mut m2: Vec<Matrix> = vec![Matrix::zeros(0, 0); nf];
        let mut basis: Vec<Vec<Vector>> = vec![Vec::new(); nf];
        let mut centroid: Vec<Vector> = vec![Vector::zeros(0); nf];

        for k in 0..=self.dim {
            for &f in &self.levels[k] {
                let face = &self.faces[f];
                let c = face.verts.iter().fold(Vector::zeros(n), |acc, &v| acc + &coords[v])
                    / face.verts.len() as f64;
                if k == 0 {
                    let v = &coords[face.verts[0]];
                    vol[f] = 1.0;
                    m1[f] = v.clone();
                    if second {
                        m2[f] = v * v.transpose();
                    }
                } else {
                    let kf = k as f64;
                    let mut vf = 0.0;
                    let mut s1 = Vector::zeros(n);
                    let mut s2 = if second { Matrix::zeros(n, n) } else { Matrix::zeros(0, 0) };
                    for &g in &face.children {
                        let origin = &coords[self.faces[g].verts[0]];
                        let mut w = &c - origin;
                        for _ in 0..2 {
                            for e in &basis[g] {
                                let t = e.dot(&w);
                                w.axpy(-t, e, 1.0);
                            }
                        }
                        let h = w.norm();
                        let vg = vol[g];
                        vf += h * vg / kf;
                        let w1 = &m1[g] - &c * vg;
                        s1 += (&c * (vg / kf) + &w1 / (kf + 1.0)) * h;
                        if second {
                            let cc = &c * c.transpose();
                            let cw = &c * w1.transpose();
                            let w2 = &m2[g] - &c * m1[g].transpose() - &m1[g] * c.transpose() + &cc * vg;
                            s2 += (cc * (vg / kf) + (&cw + cw.transpose()) / (kf + 1.0) + w2 / (kf + 2.0)) * h;
                        }
                    }
                    vol[f] = vf;
                    m1[f] = s1;
                    if second {
                        m2[f] = s2;
                    }
                }
                if k < self.dim {
                    basis[f] = face_basis(&face.verts, coords, k);
                }
                centroid[f] = c;
            }
        }
        Moments {
            volume: vol[self.top],
            first: std::mem::take(&mut m1[self.top]),
            second: std::mem::take(&mut m2[self.top]),
        }
    }
}

/// Orthonormal basis (k vectors) of the affine hull of the listed vertices,
/// chosen greedily by largest residual.
fn face_basis(verts: &[usize], coords: &[Vector], k: usize) -> Vec<Vector> {
    let o = &coords[verts[0]];
    let mut diffs: Vec<Vector> = verts[1..].iter().map(|&v| &coords[v] - o).collect();
    let mut basis = Vec::with_capacity(k);
    while basis.len() < k {
        let (best, norm) = diffs
            .iter()
            .enumerate()
            .map(|(i, d)| (i, d.norm()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if norm <= 0.0 {
            break;
        }
        let e = &diffs[best] / norm;
        for d in diffs.iter_mut() {
            let t = e.dot(d);
            d.axpy(-t, &e, 1.0);
        }
        basis.push(e);
    }
    basis
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hull::{hull_of_points, vertices_of_halfspaces};
    use approx::assert_relative_eq;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    #[test]
    fn cube_volume_and_face_counts() {
        for d in 1..=6 {
            let mut normals = Vec::new();
            for i in 0..d {
                for s in [1.0, -1.0] {
                    let mut a = Vector::zeros(d);
                    a[i] = s;
                    normals.push(a);
                }
            }
            let h = vertices_of_halfspaces(&normals, &vec![1.0; 2 * d]).unwrap();
            let lat = FaceLattice::new(d, h.vertices.len(), &h.incidence);
            assert_relative_eq!(lat.volume(&h.vertices), 2f64.powi(d as i32), max_relative = 1e-12);
            for k in 0..d {
                // number of k-faces of the cube: binom(d,k) 2^(d-k)
                let expect = crate::linalg::binomial(d as u64, k as u64) * 2f64.powi((d - k) as i32);
                assert_eq!(lat.n_faces(k) as f64, expect);
            }
        }
    }

    #[test]
    fn simplex_moments_match_closed_form() {
        // standard simplex conv{0, e_1, e_2, e_3}: vol 1/6, centroid 1/4,
        // int x_i^2 = 2/5! = 1/60, int x_i x_j = 1/5! = 1/120
        let pts = vec![v(&[0.0, 0.0, 0.0]), v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0]), v(&[0.0, 0.0, 1.0])];
        let h = hull_of_points(&pts).unwrap();
        let lat = FaceLattice::new(3, h.vertices.len(), &h.incidence);
        let m = lat.moments(&h.vertices);
        assert_relative_eq!(m.volume, 1.0 / 6.0, max_relative = 1e-12);
        for i in 0..3 {
            assert_relative_eq!(m.first[i], 1.0 / 24.0, max_relative = 1e-12);
            for j in 0..3 {
                let e = if i == j { 1.0 / 60.0 } else { 1.0 / 120.0 };
                assert_relative_eq!(m.second[(i, j)], e, max_relative = 1e-12);
            }
        }
    }
}
