//! Convex bodies: polytopes (both representations kept), ellipsoids and the
//! ball-times-segment cylinders, plus subspaces and affine positions.

use crate::error::{Error, Result};
use crate::hull::{self, HullData};
use crate::lattice::FaceLattice;
use crate::linalg::{self, lex_cmp, Matrix, Vector};
use crate::lp::{LinearProgram, VarBound};
use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

/// Geometric tolerance, relative to the circumradius.
pub const TAU_GEOM: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Primary {
    Vertices,
    Halfspaces,
}

/// A full-dimensional polytope with both representations and the
/// facet -> vertex incidence.
#[derive(Debug, Clone)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<Vector>,
    normals: Vec<Vector>,
    offsets: Vec<f64>,
    incidence: Vec<FixedBitSet>,
    primary: Primary,
    vflat: Vec<f64>,
    gflat: Vec<f64>,
}

impl Polytope {
    fn from_hull(h: HullData, primary: Primary) -> Self {
        let dim = h.vertices[0].len();
        let mut vorder: Vec<usize> = (0..h.vertices.len()).collect();
        vorder.sort_by(|&a, &b| lex_cmp(h.vertices[a].as_slice(), h.vertices[b].as_slice()));
        let mut vpos = vec![0; vorder.len()];
        for (new, &old) in vorder.iter().enumerate() {
            vpos[old] = new;
        }
        let mut forder: Vec<usize> = (0..h.normals.len()).collect();
        forder.sort_by(|&a, &b| {
            lex_cmp(h.normals[a].as_slice(), h.normals[b].as_slice()).then(h.offsets[a].total_cmp(&h.offsets[b]))
        });
        let vertices: Vec<Vector> = vorder.iter().map(|&i| h.vertices[i].clone()).collect();
        let normals: Vec<Vector> = forder.iter().map(|&i| h.normals[i].clone()).collect();
        let offsets: Vec<f64> = forder.iter().map(|&i| h.offsets[i]).collect();
        let incidence: Vec<FixedBitSet> = forder
            .iter()
            .map(|&i| {
                let mut b = FixedBitSet::with_capacity(vertices.len());
                h.incidence[i].ones().for_each(|v| b.insert(vpos[v]));
                b
            })
            .collect();
        let mut p = Polytope { dim, vertices, normals, offsets, incidence, primary, vflat: vec![], gflat: vec![] };
        p.refresh_caches();
        p
    }

    fn refresh_caches(&mut self) {
        self.vflat = self.vertices.iter().flat_map(|v| v.iter().copied()).collect();
        self.gflat = self
            .normals
            .iter()
            .zip(&self.offsets)
            .flat_map(|(a, &b)| a.iter().map(move |x| x / b))
            .collect();
    }

    /// Rebuilds from transformed data keeping the combinatorics.
    fn with_data(&self, vertices: Vec<Vector>, normals: Vec<Vector>, offsets: Vec<f64>, primary: Primary) -> Self {
        Polytope::from_hull(
            HullData { vertices, normals, offsets, incidence: self.incidence.clone() },
            primary,
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn vertices(&self) -> &[Vector] {
        &self.vertices
    }
    pub fn normals(&self) -> &[Vector] {
        &self.normals
    }
    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }
    pub fn incidence(&self) -> &[FixedBitSet] {
        &self.incidence
    }
    pub fn primary(&self) -> Primary {
        self.primary
    }
    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn n_facets(&self) -> usize {
        self.normals.len()
    }

    /// Vertex -> facets incidence (the facet incidence of the polar).
    pub fn transposed_incidence(&self) -> Vec<FixedBitSet> {
        let mut t = vec![FixedBitSet::with_capacity(self.normals.len()); self.vertices.len()];
        for (f, inc) in self.incidence.iter().enumerate() {
            inc.ones().for_each(|v| t[v].insert(f));
        }
        t
    }

    pub fn lattice(&self) -> FaceLattice {
        FaceLattice::new(self.dim, self.vertices.len(), &self.incidence)
    }

    #[inline]
    fn gauge(&self, x: &[f64]) -> f64 {
        let n = self.dim;
        let mut best = f64::NEG_INFINITY;
        for row in self.gflat.chunks_exact(n) {
            let s = linalg::dot(row, x);
            if s > best {
                best = s;
            }
        }
        best.max(0.0)
    }

    #[inline]
    fn support(&self, u: &[f64]) -> f64 {
        let n = self.dim;
        let mut best = f64::NEG_INFINITY;
        for row in self.vflat.chunks_exact(n) {
            let s = linalg::dot(row, u);
            if s > best {
                best = s;
            }
        }
        best
    }

    /// Volume as a sum of cones from the vertex centroid over simplex
    /// facets; `None` unless every facet has exactly `dim` vertices.
    pub fn simplicial_volume(&self) -> Option<f64> {
        let n = self.dim;
        if self.incidence.iter().any(|f| f.count_ones(..) != n) {
            return None;
        }
        let c = self.vertices.iter().fold(Vector::zeros(n), |acc, v| acc + v) / self.vertices.len() as f64;
        let fact: f64 = (1..=n).map(|i| i as f64).product();
        let total: f64 = self
            .incidence
            .iter()
            .map(|f| {
                let cols: Vec<Vector> = f.ones().map(|v| &self.vertices[v] - &c).collect();
                Matrix::from_columns(&cols).determinant().abs()
            })
            .sum();
        Some(total / fact)
    }

    /// Gauge of `K - K` without building it: least `t` with
    /// `x = Σλ_i v_i - Σμ_j v_j`, `Σλ = Σμ = t`.
    pub fn difference_gauge_lp(&self, x: &[f64]) -> Result<f64> {
        let m = self.vertices.len();
        let mut obj = vec![0.0; 2 * m + 1];
        obj[2 * m] = -1.0;
        let mut lp = LinearProgram::new(obj, vec![VarBound::NonNegative; 2 * m + 1]);
        for k in 0..self.dim {
            let mut row = Vec::with_capacity(2 * m + 1);
            row.extend(self.vertices.iter().map(|v| v[k]));
            row.extend(self.vertices.iter().map(|v| -v[k]));
            row.push(0.0);
            lp.eq(row, x[k]);
        }
        for half in 0..2 {
            let mut row = vec![0.0; 2 * m + 1];
            row[half * m..(half + 1) * m].iter_mut().for_each(|c| *c = 1.0);
            row[2 * m] = -1.0;
            lp.eq(row, 0.0);
        }
        Ok(-lp.solve()?.value)
    }

    /// Gauge through the V-representation: `1 / max{t : t x in K}` by LP.
    pub fn gauge_lp(&self, x: &[f64]) -> Result<f64> {
        let m = self.vertices.len();
        let mut obj = vec![0.0; m + 1];
        obj[m] = 1.0;
        let mut lp = LinearProgram::new(obj, vec![VarBound::NonNegative; m + 1]);
        for k in 0..self.dim {
            let mut row: Vec<f64> = self.vertices.iter().map(|v| v[k]).collect();
            row.push(-x[k]);
            lp.eq(row, 0.0);
        }
        let mut row = vec![1.0; m];
        row.push(0.0);
        lp.eq(row, 1.0);
        match lp.solve() {
            Ok(s) => Ok(if s.value > 0.0 { 1.0 / s.value } else { f64::INFINITY }),
            Err(Error::Lp("unbounded")) => Ok(0.0),
            Err(e) => Err(e),
        }
    }
}

/// `{x : (x - c)^T A^{-1} (x - c) <= 1}` with `A = L L^T`.
#[derive(Debug, Clone)]
pub struct Ellipsoid {
    center: Vector,
    shape: Matrix,
    chol: Matrix,
    chol_inv: Matrix,
    white_center: Vector,
}

impl Ellipsoid {
    pub fn new(center: Vector, shape: Matrix) -> Result<Self> {
        let n = center.len();
        if shape.nrows() != n || shape.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: shape.nrows() });
        }
        let shape = linalg::symmetrize(&shape);
        let eig = shape.clone().symmetric_eigen();
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if !(max > 0.0) || min < 1e-12 * max {
            return Err(Error::DegenerateBody("ellipsoid shape is not positive definite".into()));
        }
        let chol = shape.clone().cholesky().ok_or(Error::Singular)?.l();
        let chol_inv = chol.clone().try_inverse().ok_or(Error::Singular)?;
        let white_center = &chol_inv * &center;
        Ok(Self { center, shape, chol, chol_inv, white_center })
    }

    pub fn center(&self) -> &Vector {
        &self.center
    }
    pub fn shape(&self) -> &Matrix {
        &self.shape
    }
    /// Lower Cholesky factor `L` with `E = c + L B`.
    pub fn factor(&self) -> &Matrix {
        &self.chol
    }
    pub fn is_centered(&self) -> bool {
        self.center.amax() <= 1e-12 * self.chol.amax()
    }

    fn gauge(&self, x: &[f64]) -> f64 {
        let n = self.center.len();
        let mut wx = vec![0.0; n];
        // forward substitution with the inverse factor (lower triangular)
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..=i {
                s += self.chol_inv[(i, j)] * x[j];
            }
            wx[i] = s;
        }
        let alpha: f64 = wx.iter().map(|v| v * v).sum();
        let beta: f64 = wx.iter().zip(self.white_center.iter()).map(|(a, b)| a * b).sum();
        let gamma = self.white_center.norm_squared();
        if gamma == 0.0 {
            return alpha.sqrt();
        }
        let q = 1.0 - gamma;
        (-beta + (beta * beta + alpha * q).sqrt()) / q
    }

    fn support(&self, u: &[f64]) -> f64 {
        let n = self.center.len();
        let mut s2 = 0.0;
        for j in 0..n {
            let mut s = 0.0;
            for i in j..n {
                s += self.chol[(i, j)] * u[i];
            }
            s2 += s * s;
        }
        linalg::dot(self.center.as_slice(), u) + s2.sqrt()
    }
}

/// `L (B_2^k x [-h, h])` in `R^{k+1}`.
#[derive(Debug, Clone)]
pub struct Cylinder {
    k: usize,
    half_height: f64,
    map: Matrix,
    map_inv: Matrix,
}

impl Cylinder {
    pub fn k(&self) -> usize {
        self.k
    }
    pub fn half_height(&self) -> f64 {
        self.half_height
    }
    pub fn map(&self) -> &Matrix {
        &self.map
    }

    /// Largest `r` with `r B ⊆ C`.
    pub fn inradius(&self) -> f64 {
        let m = self.map_inv.transpose();
        let disc = if self.k > 0 { linalg::op_norm(&m.columns(0, self.k).into_owned()) } else { 0.0 };
        1.0 / disc.max(m.column(self.k).norm() / self.half_height)
    }

    pub fn circumradius(&self) -> f64 {
        let axis = self.map.column(self.k) * self.half_height;
        if self.k == 0 {
            return axis.norm();
        }
        linalg::max_norm_on_ellipsoid(&axis, &self.map.columns(0, self.k).into_owned())
    }

    fn gauge(&self, x: &[f64]) -> f64 {
        let y = &self.map_inv * Vector::from_column_slice(x);
        let r = y.rows(0, self.k).norm();
        r.max(y[self.k].abs() / self.half_height)
    }

    fn support(&self, u: &[f64]) -> f64 {
        let w = self.map.transpose() * Vector::from_column_slice(u);
        w.rows(0, self.k).norm() + self.half_height * w[self.k].abs()
    }
}

#[derive(Debug, Clone)]
pub enum Shape {
    Polytope(Polytope),
    Ellipsoid(Ellipsoid),
    Cylinder(Cylinder),
}

/// An immutable convex body in `R^dim`.
#[derive(Debug, Clone)]
pub struct ConvexBody {
    dim: usize,
    shape: Shape,
}

impl ConvexBody {
    pub fn from_vertices(points: &[Vector]) -> Result<Self> {
        let h = hull::hull_of_points(points)?;
        Ok(Self::polytope(Polytope::from_hull(h, Primary::Vertices)))
    }

    pub fn from_halfspaces(normals: &[Vector], offsets: &[f64]) -> Result<Self> {
        if normals.len() != offsets.len() {
            return Err(Error::DimensionMismatch { expected: normals.len(), got: offsets.len() });
        }
        let h = hull::vertices_of_halfspaces(normals, offsets)?;
        Ok(Self::polytope(Polytope::from_hull(h, Primary::Halfspaces)))
    }

    pub fn ellipsoid(center: Vector, shape: Matrix) -> Result<Self> {
        let e = Ellipsoid::new(center, shape)?;
        Ok(Self { dim: e.center.len(), shape: Shape::Ellipsoid(e) })
    }

    pub fn ball(n: usize) -> Self {
        Self::ellipsoid(Vector::zeros(n), Matrix::identity(n, n)).expect("unit ball")
    }

    /// `B_2^k x [-h, h]` in `R^{k+1}`.
    pub fn cylinder(k: usize, half_height: f64) -> Result<Self> {
        if !(half_height > 0.0) {
            return Err(Error::NonPositive("half height"));
        }
        let n = k + 1;
        Ok(Self {
            dim: n,
            shape: Shape::Cylinder(Cylinder {
                k,
                half_height,
                map: Matrix::identity(n, n),
                map_inv: Matrix::identity(n, n),
            }),
        })
    }

    fn polytope(p: Polytope) -> Self {
        Self { dim: p.dim, shape: Shape::Polytope(p) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn shape(&self) -> &Shape {
        &self.shape
    }
    pub fn as_polytope(&self) -> Option<&Polytope> {
        match &self.shape {
            Shape::Polytope(p) => Some(p),
            _ => None,
        }
    }
    pub fn as_ellipsoid(&self) -> Option<&Ellipsoid> {
        match &self.shape {
            Shape::Ellipsoid(e) => Some(e),
            _ => None,
        }
    }
    pub fn as_cylinder(&self) -> Option<&Cylinder> {
        match &self.shape {
            Shape::Cylinder(c) => Some(c),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match &self.shape {
            Shape::Polytope(p) if p.primary == Primary::Vertices => "vpolytope",
            Shape::Polytope(_) => "hpolytope",
            Shape::Ellipsoid(_) => "ellipsoid",
            Shape::Cylinder(_) => "cylinder",
        }
    }

    /// Polytope or error naming the operation.
    pub fn require_polytope(&self, op: &str) -> Result<&Polytope> {
        self.as_polytope().ok_or_else(|| Error::Unsupported(format!("{op} on a {} body", self.kind())))
    }

    /// Minkowski functional; assumes 0 is interior (see [`Self::require_interior`]).
    #[inline]
    pub fn gauge(&self, x: &[f64]) -> f64 {
        match &self.shape {
            Shape::Polytope(p) => p.gauge(x),
            Shape::Ellipsoid(e) => e.gauge(x),
            Shape::Cylinder(c) => c.gauge(x),
        }
    }

    pub fn gauge_checked(&self, x: &[f64]) -> Result<f64> {
        self.require_interior()?;
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(self.gauge(x))
    }

    #[inline]
    pub fn support(&self, u: &[f64]) -> f64 {
        match &self.shape {
            Shape::Polytope(p) => p.support(u),
            Shape::Ellipsoid(e) => e.support(u),
            Shape::Cylinder(c) => c.support(u),
        }
    }

    /// `max_{x in K} |x|`.
    pub fn circumradius(&self) -> f64 {
        match &self.shape {
            Shape::Polytope(p) => p.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max),
            Shape::Ellipsoid(e) => linalg::max_norm_on_ellipsoid(&e.center, &e.chol),
            Shape::Cylinder(c) => c.circumradius(),
        }
    }

    /// Radius of a ball around 0 contained in the body (exact for polytopes,
    /// a lower bound otherwise); negative when 0 lies outside a polytope.
    pub fn interior_margin(&self) -> f64 {
        match &self.shape {
            Shape::Polytope(p) => p.offsets.iter().copied().fold(f64::INFINITY, f64::min),
            Shape::Ellipsoid(e) => {
                let rho = e.white_center.norm();
                let smin = e.shape.clone().symmetric_eigen().eigenvalues.min().sqrt();
                (1.0 - rho) * smin
            }
            Shape::Cylinder(c) => c.inradius(),
        }
    }

    pub fn require_interior(&self) -> Result<()> {
        let margin = self.interior_margin();
        if margin >= TAU_GEOM * self.circumradius().max(1e-300) {
            Ok(())
        } else {
            Err(Error::NotInterior { margin })
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        match &self.shape {
            Shape::Polytope(p) => p.normals.iter().zip(&p.offsets).all(|(a, b)| linalg::dot(a.as_slice(), x) <= b + tol),
            Shape::Ellipsoid(e) => {
                let d = Vector::from_column_slice(x) - &e.center;
                (&e.chol_inv * d).norm() <= 1.0 + tol
            }
            Shape::Cylinder(c) => c.gauge(x) <= 1.0 + tol,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match &self.shape {
            Shape::Polytope(p) => {
                let tol = 1e-9 * self.circumradius();
                p.vertices.iter().all(|v| p.vertices.iter().any(|w| (v + w).amax() <= tol))
            }
            Shape::Ellipsoid(e) => e.is_centered(),
            Shape::Cylinder(_) => true,
        }
    }

    pub fn volume(&self) -> Result<f64> {
        match &self.shape {
            Shape::Polytope(p) => Ok(p.simplicial_volume().unwrap_or_else(|| p.lattice().volume(&p.vertices))),
            Shape::Ellipsoid(e) => Ok(linalg::unit_ball_volume(self.dim) * e.chol.diagonal().product().abs()),
            Shape::Cylinder(c) => {
                Ok(linalg::unit_ball_volume(c.k) * 2.0 * c.half_height * c.map.determinant().abs())
            }
        }
    }

    pub fn polar(&self) -> Result<ConvexBody> {
        self.require_interior()?;
        match &self.shape {
            Shape::Polytope(p) => {
                let verts: Vec<Vector> = p.normals.iter().zip(&p.offsets).map(|(a, b)| a / *b).collect();
                let mut normals = Vec::with_capacity(p.vertices.len());
                let mut offsets = Vec::with_capacity(p.vertices.len());
                for v in &p.vertices {
                    let nv = v.norm();
                    normals.push(v / nv);
                    offsets.push(1.0 / nv);
                }
                let primary = match p.primary {
                    Primary::Vertices => Primary::Halfspaces,
                    Primary::Halfspaces => Primary::Vertices,
                };
                let h = HullData { vertices: verts, normals, offsets, incidence: p.transposed_incidence() };
                Ok(Self::polytope(Polytope::from_hull(h, primary)))
            }
            Shape::Ellipsoid(e) => {
                // {y : c.y + sqrt(y^T A y) <= 1} with Q = A - c c^T
                let c = &e.center;
                let q = &e.shape - c * c.transpose();
                let qi = q.try_inverse().ok_or(Error::Singular)?;
                let qic = &qi * c;
                let scale = 1.0 + c.dot(&qic);
                Self::ellipsoid(-qic, qi * scale)
            }
            Shape::Cylinder(_) => Err(Error::Unsupported("polar of a cylinder".into())),
        }
    }

    /// `T K` for invertible `T`.
    pub fn linear_image(&self, t: &Matrix) -> Result<ConvexBody> {
        if t.nrows() != self.dim || t.ncols() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: t.nrows() });
        }
        let t_inv = t.clone().try_inverse().ok_or(Error::Singular)?;
        match &self.shape {
            Shape::Polytope(p) => {
                let verts = p.vertices.iter().map(|v| t * v).collect();
                let tit = t_inv.transpose();
                let mut normals = Vec::with_capacity(p.normals.len());
                let mut offsets = Vec::with_capacity(p.normals.len());
                for (a, b) in p.normals.iter().zip(&p.offsets) {
                    let a2 = &tit * a;
                    let n = a2.norm();
                    normals.push(a2 / n);
                    offsets.push(b / n);
                }
                Ok(Self::polytope(p.with_data(verts, normals, offsets, p.primary)))
            }
            Shape::Ellipsoid(e) => Self::ellipsoid(t * &e.center, t * &e.shape * t.transpose()),
            Shape::Cylinder(c) => Ok(Self {
                dim: self.dim,
                shape: Shape::Cylinder(Cylinder {
                    k: c.k,
                    half_height: c.half_height,
                    map: t * &c.map,
                    map_inv: &c.map_inv * t_inv,
                }),
            }),
        }
    }

    /// `K + s`.
    pub fn translate(&self, s: &Vector) -> Result<ConvexBody> {
        match &self.shape {
            Shape::Polytope(p) => {
                let verts = p.vertices.iter().map(|v| v + s).collect();
                let offsets = p.normals.iter().zip(&p.offsets).map(|(a, b)| b + a.dot(s)).collect();
                Ok(Self::polytope(p.with_data(verts, p.normals.clone(), offsets, p.primary)))
            }
            Shape::Ellipsoid(e) => Self::ellipsoid(&e.center + s, e.shape.clone()),
            Shape::Cylinder(_) => {
                if s.amax() == 0.0 {
                    Ok(self.clone())
                } else {
                    Err(Error::Unsupported("translated cylinder".into()))
                }
            }
        }
    }

    /// `K_x = K - x`.
    pub fn shifted(&self, x: &Vector) -> Result<ConvexBody> {
        self.translate(&(-x))
    }

    pub fn scaled(&self, t: f64) -> Result<ConvexBody> {
        if !(t > 0.0) {
            return Err(Error::NonPositive("scale factor"));
        }
        self.linear_image(&(Matrix::identity(self.dim, self.dim) * t))
    }

    pub fn negated(&self) -> ConvexBody {
        self.linear_image(&(-Matrix::identity(self.dim, self.dim))).expect("reflection is invertible")
    }

    pub fn affine_image(&self, pos: &AffinePosition) -> Result<ConvexBody> {
        self.linear_image(&pos.linear)?.translate(&pos.shift)
    }

    /// The other representation of a polytope (as the primary one).
    pub fn hull_convert(&self) -> Result<ConvexBody> {
        if self.dim > 12 {
            return Err(Error::Unsupported("hull conversion above dimension 12".into()));
        }
        let p = self.require_polytope("hull_convert")?;
        let mut q = p.clone();
        q.primary = match p.primary {
            Primary::Vertices => Primary::Halfspaces,
            Primary::Halfspaces => Primary::Vertices,
        };
        Ok(Self::polytope(q))
    }

    /// `K - K`.
    pub fn difference_body(&self) -> Result<ConvexBody> {
        match &self.shape {
            Shape::Polytope(p) => {
                if self.is_symmetric() {
                    return self.scaled(2.0);
                }
                let mut pts = Vec::with_capacity(p.vertices.len() * p.vertices.len());
                for (i, v) in p.vertices.iter().enumerate() {
                    for (j, w) in p.vertices.iter().enumerate() {
                        if i != j {
                            pts.push(v - w);
                        }
                    }
                }
                Self::from_vertices(&pts)
            }
            Shape::Ellipsoid(e) => Self::ellipsoid(Vector::zeros(self.dim), &e.shape * 4.0),
            Shape::Cylinder(_) => self.scaled(2.0),
        }
    }

    /// `K ∩ (-K)`.
    pub fn central_intersection(&self) -> Result<ConvexBody> {
        self.require_interior()?;
        if self.is_symmetric() {
            return Ok(self.clone());
        }
        let p = self.require_polytope("central_intersection")?;
        let mut normals = p.normals.clone();
        let mut offsets = p.offsets.clone();
        for (a, b) in p.normals.iter().zip(&p.offsets) {
            normals.push(-a);
            offsets.push(*b);
        }
        Self::from_halfspaces(&normals, &offsets)
    }

    /// `conv(K, -K)`.
    pub fn conv_union_reflection(&self) -> Result<ConvexBody> {
        if self.is_symmetric() {
            return Ok(self.clone());
        }
        let p = self.require_polytope("conv_union_reflection")?;
        let mut pts = p.vertices.clone();
        pts.extend(p.vertices.iter().map(|v| -v));
        Self::from_vertices(&pts)
    }

    /// `K ∩ E` in the coordinates of `E`.
    pub fn section(&self, e: &Subspace) -> Result<ConvexBody> {
        self.require_interior()?;
        match self.section_through(e, &Vector::zeros(self.dim))? {
            Some(b) => Ok(b),
            None => Err(Error::DegenerateSection),
        }
    }

    /// `(K - x) ∩ E` in the coordinates of `E`, or `None` when it is empty or
    /// not full-dimensional in `E`.
    pub fn section_through(&self, e: &Subspace, x: &Vector) -> Result<Option<ConvexBody>> {
        if e.ambient_dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: e.ambient_dim() });
        }
        let u = e.basis();
        match &self.shape {
            Shape::Polytope(p) => {
                let mut normals = Vec::new();
                let mut offsets = Vec::new();
                for (a, b) in p.normals.iter().zip(&p.offsets) {
                    let row = u.transpose() * a;
                    let rhs = b - a.dot(x);
                    if row.norm() <= 1e-12 {
                        if rhs < 0.0 {
                            return Ok(None);
                        }
                        continue;
                    }
                    normals.push(row);
                    offsets.push(rhs);
                }
                match Self::from_halfspaces(&normals, &offsets) {
                    Ok(b) => Ok(Some(b)),
                    Err(Error::DegenerateBody(_)) => Ok(None),
                    Err(err) => Err(err),
                }
            }
            Shape::Ellipsoid(el) => {
                let c = &el.center - x;
                let ai = el.shape.clone().try_inverse().ok_or(Error::Singular)?;
                let pm = u.transpose() * &ai * u;
                let pinv = pm.clone().try_inverse().ok_or(Error::Singular)?;
                let y0 = &pinv * (u.transpose() * &ai * &c);
                let rhs = 1.0 - c.dot(&(&ai * &c)) + y0.dot(&(&pm * &y0));
                if rhs <= 1e-14 {
                    return Ok(None);
                }
                Ok(Some(Self::ellipsoid(y0, pinv * rhs)?))
            }
            Shape::Cylinder(_) => Err(Error::Unsupported("materialized section of a cylinder".into())),
        }
    }

    /// Orthogonal projection onto `E`, in the coordinates of `E`.
    pub fn project(&self, e: &Subspace) -> Result<ConvexBody> {
        let u = e.basis();
        match &self.shape {
            Shape::Polytope(p) => {
                let pts: Vec<Vector> = p.vertices.iter().map(|v| u.transpose() * v).collect();
                Self::from_vertices(&pts)
            }
            Shape::Ellipsoid(el) => Self::ellipsoid(u.transpose() * &el.center, u.transpose() * &el.shape * u),
            Shape::Cylinder(_) => Err(Error::Unsupported("projection of a cylinder".into())),
        }
    }

    /// Endpoints `(p, q)` of a longest chord parallel to `direction`, `q - p`
    /// a nonnegative multiple of it. Among longest chords the one through the
    /// midpoint of the lexicographically smallest and largest base points is
    /// returned, so symmetric bodies give chords through the center.
    pub fn max_chord(&self, direction: &Vector) -> Result<(Vector, Vector)> {
        let nrm = direction.norm();
        if !(nrm > 0.0) {
            return Err(Error::NonPositive("chord direction norm"));
        }
        let u = direction / nrm;
        match &self.shape {
            Shape::Polytope(p) => polytope_max_chord(p, &u),
            Shape::Ellipsoid(e) => {
                let ai = e.shape.clone().try_inverse().ok_or(Error::Singular)?;
                let s = 1.0 / u.dot(&(&ai * &u)).sqrt();
                Ok((&e.center - &u * s, &e.center + &u * s))
            }
            Shape::Cylinder(c) => {
                let s = 1.0 / c.gauge(u.as_slice());
                Ok((-&u * s, &u * s))
            }
        }
    }

    /// Gauge of `K - K` computed from chord lengths (independent of any hull).
    pub fn difference_gauge(&self, x: &Vector) -> Result<f64> {
        let n = x.norm();
        if n == 0.0 {
            return Ok(0.0);
        }
        let (p, q) = self.max_chord(x)?;
        Ok(n / (q - p).norm())
    }
}

fn polytope_max_chord(p: &Polytope, u: &Vector) -> Result<(Vector, Vector)> {
    let m = p.vertices.len();
    let n = p.dim;
    // variables: lambda (m, top end), mu (m, base), t
    let build = |obj: Vec<f64>| {
        let mut lp = LinearProgram::new(obj, vec![VarBound::NonNegative; 2 * m + 1]);
        for k in 0..n {
            let mut row = Vec::with_capacity(2 * m + 1);
            row.extend(p.vertices.iter().map(|v| v[k]));
            row.extend(p.vertices.iter().map(|v| -v[k]));
            row.push(-u[k]);
            lp.eq(row, 0.0);
        }
        let mut row = vec![0.0; 2 * m + 1];
        row[..m].iter_mut().for_each(|x| *x = 1.0);
        lp.eq(row.clone(), 1.0);
        let mut row = vec![0.0; 2 * m + 1];
        row[m..2 * m].iter_mut().for_each(|x| *x = 1.0);
        lp.eq(row, 1.0);
        lp
    };
    let mut obj = vec![0.0; 2 * m + 1];
    obj[2 * m] = 1.0;
    let best = build(obj).solve()?;
    let t_star = best.value;
    let scale = 1.0 + p.vertices.iter().map(|v| v.amax()).fold(0.0, f64::max);

    let base_coord = |k: usize, sign: f64| -> Vec<f64> {
        let mut o = vec![0.0; 2 * m + 1];
        for (j, v) in p.vertices.iter().enumerate() {
            o[m + j] = sign * v[k];
        }
        o
    };
    let lex = |sign: f64, tol: f64| -> Result<Vector> {
        let mut lp = build(vec![0.0; 2 * m + 1]);
        let mut trow = vec![0.0; 2 * m + 1];
        trow[2 * m] = 1.0;
        lp.ge(trow, t_star - tol);
        let mut base = Vector::zeros(n);
        for k in 0..n {
            // minimize sign * p_k  ==  maximize -sign * p_k
            lp.set_objective(base_coord(k, -sign));
            let s = lp.solve()?;
            let val = -s.value; // sign * p_k at the optimum
            base[k] = sign * val;
            lp.le(base_coord(k, sign), val + tol);
        }
        Ok(base)
    };
    // the pinned optimum can make the chained LPs numerically infeasible;
    // widen the tolerance, then fall back to the optimal chord itself
    for tol in [1e-10, 1e-8, 1e-6].map(|t| t * scale) {
        match lex(1.0, tol).and_then(|lo| Ok((lo, lex(-1.0, tol)?))) {
            Ok((lo, hi)) => {
                let base = (lo + hi) * 0.5;
                let top = &base + u * t_star;
                return Ok((base, top));
            }
            Err(Error::Lp(_)) => {}
            Err(e) => return Err(e),
        }
    }
    let base = p.vertices.iter().zip(&best.x[m..2 * m]).fold(Vector::zeros(n), |acc, (v, w)| acc + v * *w);
    let top = &base + u * t_star;
    Ok((base, top))
}

/// Orthonormal basis of a linear subspace, stored as the columns of an
/// `ambient x k` matrix.
#[derive(Debug, Clone)]
pub struct Subspace {
    ambient: usize,
    basis: Matrix,
}

impl Subspace {
    /// From vectors that are already orthonormal (checked to 1e-12).
    pub fn new(ambient: usize, vectors: &[Vector]) -> Result<Self> {
        let basis = Matrix::from_fn(ambient, vectors.len(), |i, j| vectors[j][i]);
        let gram = basis.transpose() * &basis;
        if vectors.len() > ambient || (gram - Matrix::identity(vectors.len(), vectors.len())).amax() > 1e-12 {
            return Err(Error::DegenerateBody("subspace basis is not orthonormal".into()));
        }
        Ok(Self { ambient, basis })
    }

    /// Orthonormalizes a spanning list (dependent vectors are dropped).
    pub fn span(ambient: usize, vectors: &[Vector]) -> Self {
        let b = linalg::orthonormalize(vectors, 1e-10);
        Self { ambient, basis: Matrix::from_fn(ambient, b.len(), |i, j| b[j][i]) }
    }

    pub fn full(n: usize) -> Self {
        Self { ambient: n, basis: Matrix::identity(n, n) }
    }

    pub fn zero(n: usize) -> Self {
        Self { ambient: n, basis: Matrix::zeros(n, 0) }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }
    pub fn basis(&self) -> &Matrix {
        &self.basis
    }
    pub fn vectors(&self) -> Vec<Vector> {
        (0..self.dim()).map(|j| self.basis.column(j).into_owned()).collect()
    }

    pub fn complement(&self) -> Subspace {
        let c = linalg::orthogonal_complement(&self.vectors(), self.ambient);
        Self { ambient: self.ambient, basis: Matrix::from_fn(self.ambient, c.len(), |i, j| c[j][i]) }
    }

    /// `E ⊕ F` for `F` orthogonal to `E`.
    pub fn direct_sum(&self, other: &Subspace) -> Subspace {
        let mut v = self.vectors();
        v.extend(other.vectors());
        Self::span(self.ambient, &v)
    }

    /// Maps coordinates in `E` to ambient vectors.
    pub fn embed(&self, y: &Vector) -> Vector {
        &self.basis * y
    }

    pub fn coordinates(&self, x: &Vector) -> Vector {
        self.basis.transpose() * x
    }

    /// Subspace given by coordinates relative to `parent`'s basis.
    pub fn lift(&self, parent: &Subspace) -> Subspace {
        Self { ambient: parent.ambient, basis: &parent.basis * &self.basis }
    }

    pub fn projector(&self) -> Matrix {
        &self.basis * self.basis.transpose()
    }
}

#[derive(Serialize)]
struct SubspaceRepr {
    ambient_dim: usize,
    basis: Vec<Vec<f64>>,
}

impl Serialize for Subspace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        SubspaceRepr {
            ambient_dim: self.ambient,
            basis: self.vectors().iter().map(|v| v.as_slice().to_vec()).collect(),
        }
        .serialize(s)
    }
}

/// `x -> linear * x + shift`.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AffinePosition {
    #[serde(with = "linalg::serde_rows")]
    pub linear: Matrix,
    #[serde(with = "linalg::serde_vec")]
    pub shift: Vector,
}

impl AffinePosition {
    pub fn new(linear: Matrix, shift: Vector) -> Result<Self> {
        let det = linear.determinant();
        if !(det.abs() > 0.0) || !det.is_finite() {
            return Err(Error::Singular);
        }
        Ok(Self { linear, shift })
    }

    pub fn identity(n: usize) -> Self {
        Self { linear: Matrix::identity(n, n), shift: Vector::zeros(n) }
    }

    pub fn linear(t: Matrix) -> Result<Self> {
        let n = t.nrows();
        Self::new(t, Vector::zeros(n))
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.linear * x + &self.shift
    }

    /// `self ∘ inner`.
    pub fn compose(&self, inner: &AffinePosition) -> AffinePosition {
        AffinePosition { linear: &self.linear * &inner.linear, shift: &self.linear * &inner.shift + &self.shift }
    }

    pub fn condition_number(&self) -> f64 {
        let sv = self.linear.clone().svd(false, false).singular_values;
        sv.max() / sv.min()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn v(x: &[f64]) -> Vector {
        Vector::from_column_slice(x)
    }

    fn cube(n: usize) -> ConvexBody {
        let mut normals = Vec::new();
        for i in 0..n {
            for s in [1.0, -1.0] {
                let mut a = Vector::zeros(n);
                a[i] = s;
                normals.push(a);
            }
        }
        ConvexBody::from_halfspaces(&normals, &vec![1.0; 2 * n]).unwrap()
    }

    fn triangle() -> ConvexBody {
        ConvexBody::from_vertices(&[v(&[0.0, 0.0]), v(&[1.0, 0.0]), v(&[0.0, 1.0])]).unwrap()
    }

    #[test]
    fn cube_gauge_and_polar() {
        let c = cube(2);
        assert_relative_eq!(c.gauge(&[0.5, -1.5]), 1.5);
        let p = cube(3).polar().unwrap();
        let poly = p.as_polytope().unwrap();
        assert_eq!(poly.n_vertices(), 6);
        assert_eq!(poly.n_facets(), 8);
        for b in poly.offsets() {
            assert_relative_eq!(*b, 1.0 / 3f64.sqrt(), epsilon = 1e-12);
        }
    }

    #[test]
    fn ellipsoid_polar_and_gauge() {
        let e = ConvexBody::ellipsoid(Vector::zeros(2), Matrix::from_diagonal(&v(&[4.0, 1.0]))).unwrap();
        let p = e.polar().unwrap();
        let pe = p.as_ellipsoid().unwrap();
        assert_relative_eq!(pe.shape()[(0, 0)], 0.25, epsilon = 1e-14);
        assert_relative_eq!(pe.shape()[(1, 1)], 1.0, epsilon = 1e-14);
        // off-center ellipsoid: gauge agrees with bisection on membership
        let e = ConvexBody::ellipsoid(v(&[0.3, -0.2]), Matrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0])).unwrap();
        let x = v(&[0.7, 0.4]);
        let g = e.gauge(x.as_slice());
        let (mut lo, mut hi) = (1e-6, 100.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if e.contains((&x / mid).as_slice(), 0.0) {
                hi = mid
            } else {
                lo = mid
            }
        }
        assert_relative_eq!(g, hi, epsilon = 1e-10);
        // polar of the off-center ellipsoid: gauge of polar = support
        let p = e.polar().unwrap();
        for u in [v(&[1.0, 0.0]), v(&[-0.3, 0.8]), v(&[0.1, -1.0])] {
            assert_relative_eq!(p.gauge(u.as_slice()), e.support(u.as_slice()), epsilon = 1e-12);
        }
    }

    #[test]
    fn triangle_difference_body_is_hexagon() {
        let h = triangle().difference_body().unwrap();
        let p = h.as_polytope().unwrap();
        assert_eq!(p.n_vertices(), 6);
        assert_relative_eq!(h.support(&[1.0, 1.0]), 1.0, epsilon = 1e-12);
        assert_relative_eq!(h.volume().unwrap(), 3.0, epsilon = 1e-12);
    }

    #[test]
    fn chord_of_triangle_and_symmetric_bodies() {
        let t = triangle();
        let (p, q) = t.max_chord(&v(&[1.0, 0.0])).unwrap();
        assert_relative_eq!((q - &p).norm(), 1.0, epsilon = 1e-9);
        assert_relative_eq!(p[1], 0.0, epsilon = 1e-7);
        let c = cube(3);
        let (p, q) = c.max_chord(&v(&[1.0, 0.0, 0.0])).unwrap();
        assert_relative_eq!((&p + &q).norm(), 0.0, epsilon = 1e-8);
        assert_relative_eq!((q - p).norm(), 2.0, epsilon = 1e-9);
    }

    #[test]
    fn section_of_cube_along_diagonal_plane() {
        let c = cube(3);
        let s2 = 0.5f64.sqrt();
        let e = Subspace::new(3, &[v(&[s2, s2, 0.0]), v(&[0.0, 0.0, 1.0])]).unwrap();
        let s = c.section(&e).unwrap();
        assert_relative_eq!(s.volume().unwrap(), 4.0 * 2f64.sqrt(), epsilon = 1e-10);
    }

    #[test]
    fn gauge_lp_matches_facet_gauge() {
        let t = triangle().shifted(&v(&[1.0 / 3.0, 1.0 / 3.0])).unwrap();
        let x = [4.0 / 3.0, -2.0 / 3.0];
        let lp = t.as_polytope().unwrap().gauge_lp(&x).unwrap();
        assert_relative_eq!(lp, t.gauge(&x), epsilon = 1e-10);
        assert_relative_eq!(lp, 2.0, epsilon = 1e-10);
    }

    #[test]
    fn simplicial_volume_matches_lattice() {
        let pts = [v(&[0.1, 0.2, -0.9]), v(&[1.0, 0.3, 0.2]), v(&[-0.7, 0.8, 0.1]), v(&[-0.2, -0.9, 0.4]), v(&[0.3, 0.1, 1.1]), v(&[0.6, -0.5, -0.4])];
        let k = ConvexBody::from_vertices(&pts).unwrap();
        let p = k.as_polytope().unwrap();
        let fast = p.simplicial_volume().expect("general position hull is simplicial");
        assert_relative_eq!(fast, p.lattice().volume(p.vertices()), max_relative = 1e-12);
        assert!(cube(3).as_polytope().unwrap().simplicial_volume().is_none());
    }

    #[test]
    fn difference_gauge_lp_matches_hull() {
        let pts = [v(&[0.0, 0.0, 0.0]), v(&[1.0, 0.0, 0.0]), v(&[0.0, 1.0, 0.0]), v(&[0.0, 0.0, 1.0]), v(&[0.4, 0.5, 0.6])];
        let k = ConvexBody::from_vertices(&pts).unwrap();
        let kk = k.difference_body().unwrap();
        for x in [[0.3, -0.2, 0.5], [1.0, 1.0, 1.0], [-0.1, 0.0, 0.0]] {
            let lp = k.as_polytope().unwrap().difference_gauge_lp(&x).unwrap();
            assert_relative_eq!(lp, kk.gauge(&x), max_relative = 1e-9);
        }
    }
}
