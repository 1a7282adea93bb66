use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::datum::RayDatum;
use crate::error::{Error, Result};
use crate::scalar::{c, Real};

/// Pixel grid of the inversion: `points_per_axis^n` cells of side
/// `h = 2 box_halfwidth / points_per_axis`, centred at `-box_halfwidth + h i`
/// (the node layout of density fields).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionGrid<T> {
    pub n: usize,
    pub points_per_axis: usize,
    pub box_halfwidth: T,
    pub lambda_reg: T,
    pub max_iterations: usize,
    /// Optional box `(lo, hi)`; cells centred outside it are held at zero.
    pub support_box: Option<(Vec<T>, Vec<T>)>,
}

impl<T: Real> ReconstructionGrid<T> {
    pub fn new(n: usize, points_per_axis: usize, box_halfwidth: T, lambda_reg: T) -> Self {
        ReconstructionGrid { n, points_per_axis, box_halfwidth, lambda_reg, max_iterations: 400, support_box: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.points_per_axis < 2 || !(self.box_halfwidth > T::zero()) || !(self.lambda_reg >= T::zero()) {
            return Err(Error::validation("reconstruction grid needs n >= 1, N >= 2, box > 0, lambda_reg >= 0"));
        }
        Ok(())
    }

    pub fn spacing(&self) -> T {
        self.box_halfwidth * c(2.0) / T::from_usize_lossy(self.points_per_axis)
    }

    pub fn len(&self) -> usize {
        self.points_per_axis.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lower corner of the pixelated box.
    pub fn lower(&self) -> T {
        -self.box_halfwidth - self.spacing() * c(0.5)
    }

    pub fn center(&self, idx: usize) -> Vec<T> {
        let h = self.spacing();
        let mut out = vec![T::zero(); self.n];
        let mut rest = idx;
        for a in (0..self.n).rev() {
            out[a] = -self.box_halfwidth + h * T::from_usize_lossy(rest % self.points_per_axis);
            rest /= self.points_per_axis;
        }
        out
    }

    pub fn is_active(&self, idx: usize) -> bool {
        match &self.support_box {
            None => true,
            Some((lo, hi)) => self.center(idx).iter().zip(lo.iter().zip(hi)).all(|(x, (a, b))| *x >= *a && *x <= *b),
        }
    }

    fn flat(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &i| acc * self.points_per_axis + i)
    }
}

/// Compressed sparse row matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    pub rows: usize,
    pub cols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<T>,
}

impl<T: Real> SparseMatrix<T> {
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.col_idx[r.clone()].iter().copied().zip(self.values[r].iter().copied())
    }

    pub fn row_sum(&self, i: usize) -> T {
        self.row(i).map(|(_, v)| v).sum()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// `A x`, rows in parallel.
    pub fn mul(&self, x: &[T]) -> Vec<T> {
        (0..self.rows).into_par_iter().map(|i| self.row(i).map(|(j, v)| v * x[j]).sum()).collect()
    }

    /// `A^T y`.
    pub fn mul_transpose(&self, y: &[T]) -> Vec<T> {
        let mut out = vec![T::zero(); self.cols];
        for (i, yi) in y.iter().enumerate() {
            for (j, v) in self.row(i) {
                out[j] += v * *yi;
            }
        }
        out
    }
}

/// Exact intersection lengths of `[a; b]` with the grid cells, by
/// incremental traversal of the axis-plane crossings.
pub fn segment_row<T: Real>(grid: &ReconstructionGrid<T>, a: &[T], b: &[T]) -> Vec<(usize, T)> {
    let n = grid.n;
    let h = grid.spacing();
    let lo = grid.lower();
    let hi = lo + h * T::from_usize_lossy(grid.points_per_axis);
    let d: Vec<T> = a.iter().zip(b).map(|(x, y)| *y - *x).collect();
    let len = d.iter().map(|v| *v * *v).sum::<T>().sqrt();
    if len == T::zero() {
        return Vec::new();
    }
    let (mut amin, mut amax) = (T::zero(), T::one());
    for k in 0..n {
        if d[k] == T::zero() {
            if a[k] < lo || a[k] > hi {
                return Vec::new();
            }
        } else {
            let (u, v) = ((lo - a[k]) / d[k], (hi - a[k]) / d[k]);
            amin = amin.max(u.min(v));
            amax = amax.min(u.max(v));
        }
    }
    if amin >= amax {
        return Vec::new();
    }
    let mut alphas = vec![amin, amax];
    for k in 0..n {
        if d[k] == T::zero() {
            continue;
        }
        let (p, q) = (a[k] + d[k] * amin, a[k] + d[k] * amax);
        let (s, e) = if p < q { (p, q) } else { (q, p) };
        let first = ((s - lo) / h).ceil().to_i64().unwrap_or(0);
        let last = ((e - lo) / h).floor().to_i64().unwrap_or(-1);
        for i in first..=last {
            let plane = lo + h * T::from_i64(i).unwrap();
            let al = (plane - a[k]) / d[k];
            if al > amin && al < amax {
                alphas.push(al);
            }
        }
    }
    alphas.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let np = grid.points_per_axis;
    let mut row: Vec<(usize, T)> = Vec::new();
    for w in alphas.windows(2) {
        let seg = (w[1] - w[0]) * len;
        if seg <= T::zero() {
            continue;
        }
        let mid = (w[0] + w[1]) * c(0.5);
        let multi: Option<Vec<usize>> = (0..n)
            .map(|k| {
                let x = a[k] + d[k] * mid;
                let i = ((x - lo) / h).floor().to_i64()?;
                (i >= 0 && (i as usize) < np).then_some(i as usize)
            })
            .collect();
        if let Some(m) = multi {
            let idx = grid.flat(&m);
            match row.last_mut() {
                Some((j, v)) if *j == idx => *v += seg,
                _ => row.push((idx, seg)),
            }
        }
    }
    row
}

/// One row per datum; rays missing the grid give empty rows and a warning.
pub fn build_ray_matrix<T: Real>(data: &[RayDatum<T>], grid: &ReconstructionGrid<T>) -> Result<(SparseMatrix<T>, Vec<String>)> {
    if data.is_empty() {
        return Err(Error::precondition("no ray data"));
    }
    grid.validate()?;
    let rows: Vec<Vec<(usize, T)>> = data.par_iter().map(|d| segment_row(grid, &d.vertex, &d.end())).collect();
    let mut warnings = Vec::new();
    let mut m = SparseMatrix { rows: rows.len(), cols: grid.len(), row_ptr: vec![0], col_idx: Vec::new(), values: Vec::new() };
    for (i, mut r) in rows.into_iter().enumerate() {
        if r.is_empty() {
            warnings.push(format!("ray {i} does not meet the reconstruction grid"));
        }
        r.sort_by_key(|e| e.0);
        for (j, v) in r {
            if m.col_idx.len() > *m.row_ptr.last().unwrap() && *m.col_idx.last().unwrap() == j {
                *m.values.last_mut().unwrap() += v;
            } else {
                m.col_idx.push(j);
                m.values.push(v);
            }
        }
        m.row_ptr.push(m.col_idx.len());
    }
    Ok((m, warnings))
}
