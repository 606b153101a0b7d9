//! Dense two-phase simplex method with Bland's anti-cycling rule.
//!
//! The programs solved here are tiny (a few hundred columns at most), so a
//! full tableau is simpler and fast enough.

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-10;
const MAX_PIVOTS: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarBound {
    NonNegative,
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RowKind {
    Le,
    Eq,
}

#[derive(Debug, Clone)]
struct Row {
    coeffs: Vec<f64>,
    rhs: f64,
    kind: RowKind,
}

/// `maximize c·x` subject to linear (in)equalities.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    objective: Vec<f64>,
    bounds: Vec<VarBound>,
    rows: Vec<Row>,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub value: f64,
}

impl LinearProgram {
    pub fn new(objective: Vec<f64>, bounds: Vec<VarBound>) -> Self {
        assert_eq!(objective.len(), bounds.len());
        Self { objective, bounds, rows: Vec::new() }
    }

    pub fn n_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn set_objective(&mut self, objective: Vec<f64>) {
        assert_eq!(objective.len(), self.n_vars());
        self.objective = objective;
    }

    /// Adds `coeffs·x <= rhs`.
    pub fn le(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.n_vars());
        self.rows.push(Row { coeffs, rhs, kind: RowKind::Le });
        self
    }

    /// Adds `coeffs·x >= rhs`.
    pub fn ge(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        let neg = coeffs.iter().map(|c| -c).collect();
        self.le(neg, -rhs)
    }

    /// Adds `coeffs·x == rhs`.
    pub fn eq(&mut self, coeffs: Vec<f64>, rhs: f64) -> &mut Self {
        assert_eq!(coeffs.len(), self.n_vars());
        self.rows.push(Row { coeffs, rhs, kind: RowKind::Eq });
        self
    }

    pub fn solve(&self) -> Result<LpSolution> {
        Tableau::build(self).run(self)
    }
}

struct Tableau {
    m: usize,
    width: usize, // columns + rhs
    data: Vec<f64>,
    basis: Vec<usize>,
    /// structural column range per original variable: (plus, optional minus)
    var_cols: Vec<(usize, Option<usize>)>,
    n_struct: usize,
    first_artificial: usize,
    n_cols: usize,
    /// Initial tableau, kept to refactorize against accumulated drift.
    orig: Vec<f64>,
}

impl Tableau {
    fn build(lp: &LinearProgram) -> Self {
        let mut var_cols = Vec::with_capacity(lp.n_vars());
        let mut col = 0;
        for b in &lp.bounds {
            match b {
                VarBound::NonNegative => {
                    var_cols.push((col, None));
                    col += 1;
                }
                VarBound::Free => {
                    var_cols.push((col, Some(col + 1)));
                    col += 2;
                }
            }
        }
        let n_struct = col;
        let n_slack = lp.rows.iter().filter(|r| r.kind == RowKind::Le).count();
        let needs_art: Vec<bool> = lp
            .rows
            .iter()
            .map(|r| r.kind == RowKind::Eq || r.rhs < 0.0)
            .collect();
        let n_art = needs_art.iter().filter(|&&b| b).count();
        let first_artificial = n_struct + n_slack;
        let n_cols = first_artificial + n_art;
        let width = n_cols + 1;
        let m = lp.rows.len();
        let mut data = vec![0.0; m * width];
        let mut basis = vec![0; m];
        let mut slack = n_struct;
        let mut art = first_artificial;
        for (i, row) in lp.rows.iter().enumerate() {
            let scale = row.coeffs.iter().fold(0.0f64, |a, c| a.max(c.abs())).max(1e-300);
            let sign = if row.rhs < 0.0 { -1.0 } else { 1.0 };
            let f = sign / scale;
            let r = &mut data[i * width..(i + 1) * width];
            for (j, &c) in row.coeffs.iter().enumerate() {
                let (p, mneg) = var_cols[j];
                r[p] = c * f;
                if let Some(q) = mneg {
                    r[q] = -c * f;
                }
            }
            r[n_cols] = row.rhs * f;
            if row.kind == RowKind::Le {
                r[slack] = f;
                if !needs_art[i] {
                    basis[i] = slack;
                }
                slack += 1;
            }
            if needs_art[i] {
                r[art] = 1.0;
                basis[i] = art;
                art += 1;
            }
        }
        let orig = data.clone();
        Self { m, width, data, basis, var_cols, n_struct, first_artificial, n_cols, orig }
    }

    /// Recomputes the tableau as `B^{-1} [A | b]` for the current basis.
    fn reinvert(&mut self) -> bool {
        let (m, w) = (self.m, self.width);
        let b = nalgebra::DMatrix::from_fn(m, m, |i, k| self.orig[i * w + self.basis[k]]);
        let a = nalgebra::DMatrix::from_fn(m, w, |i, j| self.orig[i * w + j]);
        let Some(x) = b.lu().solve(&a) else { return false };
        for i in 0..m {
            for j in 0..w {
                self.data[i * w + j] = x[(i, j)];
            }
            // basic columns are unit vectors exactly
            let bi = self.basis[i];
            for k in 0..m {
                self.data[k * w + bi] = if k == i { 1.0 } else { 0.0 };
            }
        }
        for i in 0..m {
            let r = &mut self.data[i * w + self.n_cols];
            if *r < 0.0 && *r > -1e-9 {
                *r = 0.0;
            }
        }
        true
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.width + j]
    }

    fn pivot(&mut self, obj: &mut [f64], r: usize, c: usize) {
        let w = self.width;
        let p = self.data[r * w + c];
        for j in 0..w {
            self.data[r * w + j] /= p;
        }
        let prow: Vec<f64> = self.data[r * w..(r + 1) * w].to_vec();
        for i in 0..self.m {
            if i == r {
                continue;
            }
            let f = self.data[i * w + c];
            if f != 0.0 {
                let row = &mut self.data[i * w..(i + 1) * w];
                for (x, pv) in row.iter_mut().zip(&prow) {
                    *x -= f * pv;
                }
                row[c] = 0.0;
            }
        }
        let f = obj[c];
        if f != 0.0 {
            for (x, pv) in obj.iter_mut().zip(&prow) {
                *x -= f * pv;
            }
            obj[c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Reduced-cost row for maximizing `costs` over the current basis.
    fn objective_row(&self, costs: &[f64]) -> Vec<f64> {
        let mut obj = vec![0.0; self.width];
        obj[..self.n_cols].copy_from_slice(costs);
        for i in 0..self.m {
            let cb = costs[self.basis[i]];
            if cb != 0.0 {
                for j in 0..self.width {
                    obj[j] -= cb * self.at(i, j);
                }
            }
        }
        obj
    }

    /// Bland's rule iterations; `limit` is the first forbidden column.
    fn iterate(&mut self, obj: &mut [f64], limit: usize) -> Result<()> {
        let rhs = self.n_cols;
        for _ in 0..MAX_PIVOTS {
            let entering = (0..limit).find(|&j| obj[j] > PIVOT_TOL);
            let Some(c) = entering else { return Ok(()) };
            let mut best: Option<(usize, f64)> = None;
            let col_max = (0..self.m).map(|i| self.at(i, c).abs()).fold(0.0, f64::max);
            let pivot_min = PIVOT_TOL.max(1e-9 * col_max);
            for i in 0..self.m {
                let a = self.at(i, c);
                if a > pivot_min {
                    let ratio = self.at(i, rhs).max(0.0) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br.abs());
                            if ratio < br && !tie || tie && self.basis[i] < self.basis[bi] {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            let Some((r, _)) = best else { return Err(Error::Lp("unbounded")) };
            self.pivot(obj, r, c);
        }
        Err(Error::Lp("stalled (pivot limit reached)"))
    }

    fn run(mut self, lp: &LinearProgram) -> Result<LpSolution> {
        let rhs = self.n_cols;
        if self.first_artificial < self.n_cols {
            let mut costs = vec![0.0; self.n_cols];
            for c in costs.iter_mut().skip(self.first_artificial) {
                *c = -1.0;
            }
            let mut obj = self.objective_row(&costs);
            self.iterate(&mut obj, self.n_cols)?;
            let infeas: f64 = (0..self.m)
                .filter(|&i| self.basis[i] >= self.first_artificial)
                .map(|i| self.at(i, rhs).abs())
                .sum();
            let scale = 1.0 + (0..self.m).map(|i| self.at(i, rhs).abs()).fold(0.0, f64::max);
            if infeas > 1e-9 * scale {
                return Err(Error::Lp("infeasible"));
            }
            for i in 0..self.m {
                if self.basis[i] >= self.first_artificial {
                    if let Some(j) =
                        (0..self.first_artificial).find(|&j| self.at(i, j).abs() > 1e-9)
                    {
                        self.pivot(&mut obj, i, j);
                    }
                }
            }
        }
        let mut costs = vec![0.0; self.n_cols];
        for (j, &(p, mneg)) in self.var_cols.iter().enumerate() {
            costs[p] = lp.objective[j];
            if let Some(q) = mneg {
                costs[q] = -lp.objective[j];
            }
        }
        let mut obj = self.objective_row(&costs);
        self.iterate(&mut obj, self.first_artificial)?;
        // refactorize and continue until the fresh reduced costs agree
        for _ in 0..3 {
            if !self.reinvert() {
                break;
            }
            obj = self.objective_row(&costs);
            if !(0..self.first_artificial).any(|j| obj[j] > PIVOT_TOL) {
                break;
            }
            self.iterate(&mut obj, self.first_artificial)?;
        }
        let mut col_val = vec![0.0; self.n_struct];
        for i in 0..self.m {
            let b = self.basis[i];
            if b < self.n_struct {
                col_val[b] = self.at(i, rhs);
            }
        }
        let x: Vec<f64> = self
            .var_cols
            .iter()
            .map(|&(p, mneg)| col_val[p] - mneg.map_or(0.0, |q| col_val[q]))
            .collect();
        let value = x.iter().zip(&lp.objective).map(|(a, b)| a * b).sum();
        Ok(LpSolution { x, value })
    }
}
