use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use super::datum::RayDatum;
use super::matrix::{build_ray_matrix, ReconstructionGrid, SparseMatrix};
use crate::error::{Error, Result};
use crate::evolution::DensityField;
use crate::scalar::{c, Real};

const RESTART: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Reconstruction<T> {
    pub grid: ReconstructionGrid<T>,
    pub values: Vec<T>,
    pub iterations: usize,
    /// `|A x - b|`.
    pub residual: T,
    pub data_norm: T,
    pub converged: bool,
    pub diagnostic: Option<String>,
    pub warnings: Vec<String>,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

/// `D^T D x` for forward differences along every axis (no difference
/// across the outer boundary).
fn gradient_normal<T: Real>(grid: &ReconstructionGrid<T>, x: &[T]) -> Vec<T> {
    let np = grid.points_per_axis;
    let mut out = vec![T::zero(); x.len()];
    let mut stride = 1;
    for _ in 0..grid.n {
        for i in 0..x.len() {
            if (i / stride) % np + 1 < np {
                let j = i + stride;
                let d = x[j] - x[i];
                out[j] += d;
                out[i] -= d;
            }
        }
        stride *= np;
    }
    out
}

fn gradient_energy<T: Real>(grid: &ReconstructionGrid<T>, x: &[T]) -> T {
    let np = grid.points_per_axis;
    let mut e = T::zero();
    let mut stride = 1;
    for _ in 0..grid.n {
        for i in 0..x.len() {
            if (i / stride) % np + 1 < np {
                let d = x[i + stride] - x[i];
                e += d * d;
            }
        }
        stride *= np;
    }
    e
}

struct Problem<'a, T: Real> {
    a: &'a SparseMatrix<T>,
    b: &'a [T],
    grid: &'a ReconstructionGrid<T>,
    active: Vec<bool>,
}

impl<T: Real> Problem<'_, T> {
    fn normal(&self, x: &[T]) -> Vec<T> {
        let mut y = self.a.mul_transpose(&self.a.mul(x));
        if self.grid.lambda_reg > T::zero() {
            for (v, g) in y.iter_mut().zip(gradient_normal(self.grid, x)) {
                *v += self.grid.lambda_reg * g;
            }
        }
        self.mask(&mut y);
        y
    }

    fn mask(&self, y: &mut [T]) {
        for (v, on) in y.iter_mut().zip(&self.active) {
            if !on {
                *v = T::zero();
            }
        }
    }

    fn objective(&self, x: &[T]) -> T {
        let r: T = self.a.mul(x).iter().zip(self.b).map(|(p, q)| (*p - *q) * (*p - *q)).sum();
        r + self.grid.lambda_reg * gradient_energy(self.grid, x)
    }
}

/// Tikhonov-regularized least squares `min |Ax - b|^2 + lambda |grad x|^2`
/// by conjugate gradients on the normal equations, restarted every 50
/// iterations with a projection onto `x >= 0`.
pub fn reconstruct<T: Real>(data: &[RayDatum<T>], grid: &ReconstructionGrid<T>) -> Result<Reconstruction<T>> {
    let (a, warnings) = build_ray_matrix(data, grid)?;
    let b: Vec<T> = data.iter().map(|d| d.value).collect();
    let mut rec = solve(&a, &b, grid)?;
    rec.warnings = warnings;
    Ok(rec)
}

pub fn solve<T: Real>(a: &SparseMatrix<T>, b: &[T], grid: &ReconstructionGrid<T>) -> Result<Reconstruction<T>> {
    grid.validate()?;
    if a.cols != grid.len() || a.rows != b.len() {
        return Err(Error::config("ray matrix does not match grid or data"));
    }
    let p = Problem { a, b, grid, active: (0..grid.len()).map(|i| grid.is_active(i)).collect() };
    let mut rhs = a.mul_transpose(b);
    p.mask(&mut rhs);
    let rhs_norm = dot(&rhs, &rhs).sqrt();
    let data_norm = dot(b, b).sqrt();
    let mut x = vec![T::zero(); grid.len()];
    let mut iterations = 0;
    let mut converged = rhs_norm == T::zero();
    let mut diagnostic = None;
    let tol = c::<T>(1e-10) * rhs_norm;
    let mut best = (p.objective(&x), x.clone());
    while !converged && iterations < grid.max_iterations {
        let mut r: Vec<T> = rhs.iter().zip(p.normal(&x)).map(|(u, v)| *u - v).collect();
        let mut d = r.clone();
        let mut rr = dot(&r, &r);
        for _ in 0..RESTART {
            if rr.sqrt() <= tol {
                converged = true;
                break;
            }
            if iterations >= grid.max_iterations {
                break;
            }
            let q = p.normal(&d);
            let dq = dot(&d, &q);
            if !(dq > T::zero()) {
                diagnostic = Some(format!("conjugate gradients broke down at iteration {iterations}"));
                break;
            }
            let alpha = rr / dq;
            for i in 0..x.len() {
                x[i] += alpha * d[i];
                r[i] -= alpha * q[i];
            }
            let rr_new = dot(&r, &r);
            let beta = rr_new / rr;
            rr = rr_new;
            for i in 0..x.len() {
                d[i] = r[i] + beta * d[i];
            }
            iterations += 1;
        }
        let projected = x.iter().any(|v| *v < T::zero());
        for v in x.iter_mut() {
            *v = v.max(T::zero());
        }
        if projected {
            converged = false;
        }
        let obj = p.objective(&x);
        if obj < best.0 {
            best = (obj, x.clone());
        } else if diagnostic.is_none() && !converged {
            diagnostic = Some(format!("stagnated after {iterations} iterations; returning best iterate"));
            break;
        }
        if diagnostic.is_some() {
            break;
        }
    }
    let x = best.1;
    let residual = a.mul(&x).iter().zip(b).map(|(p, q)| (*p - *q) * (*p - *q)).sum::<T>().sqrt();
    if !converged && diagnostic.is_none() {
        diagnostic = Some(format!("iteration budget of {} exhausted", grid.max_iterations));
    }
    Ok(Reconstruction { grid: grid.clone(), values: x, iterations, residual, data_norm, converged, diagnostic, warnings: vec![] })
}

impl<T: Real> Reconstruction<T> {
    pub fn to_density(&self) -> DensityField<T> {
        DensityField {
            n: self.grid.n,
            points_per_axis: self.grid.points_per_axis,
            box_halfwidth: self.grid.box_halfwidth,
            values: self.values.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
struct DensityFile {
    n: usize,
    points_per_axis: usize,
    box_halfwidth: f64,
    values: Vec<f64>,
}

/// JSON density file: grid layout plus row-major node values.
pub fn write_density<T: Real, W: Write>(rho: &DensityField<T>, w: W) -> Result<()> {
    let f = DensityFile {
        n: rho.n,
        points_per_axis: rho.points_per_axis,
        box_halfwidth: rho.box_halfwidth.to_f64_lossy(),
        values: rho.values.iter().map(|v| v.to_f64_lossy()).collect(),
    };
    serde_json::to_writer(w, &f).map_err(|e| Error::Format(e.to_string()))
}

pub fn read_density<T: Real, R: Read>(r: R) -> Result<DensityField<T>> {
    let f: DensityFile = serde_json::from_reader(r).map_err(|e| Error::Format(e.to_string()))?;
    if f.values.len() != f.points_per_axis.pow(f.n as u32) {
        return Err(Error::Format("density file has the wrong number of values".into()));
    }
    Ok(DensityField { n: f.n, points_per_axis: f.points_per_axis, box_halfwidth: c(f.box_halfwidth), values: f.values.into_iter().map(c).collect() })
}

/// Binary 8-bit PGM of a 2-D density, first axis horizontal, second axis
/// pointing up; scaled so the maximum is white.
pub fn write_pgm<T: Real, W: Write>(rho: &DensityField<T>, mut w: W) -> Result<()> {
    if rho.n != 2 {
        return Err(Error::precondition("PGM output needs a two-dimensional density"));
    }
    let np = rho.points_per_axis;
    let max = rho.max_value();
    write!(w, "P5\n{np} {np}\n255\n")?;
    let mut bytes = Vec::with_capacity(np * np);
    for row in (0..np).rev() {
        for col in 0..np {
            let v = rho.values[col * np + row];
            let s = if max > T::zero() { (v.max(T::zero()) / max * c(255.0)).round().to_u8().unwrap_or(255) } else { 0 };
            bytes.push(s);
        }
    }
    w.write_all(&bytes)?;
    Ok(())
}

/// Parallel-beam filtered backprojection with the Ram-Lak kernel.
/// `sinogram[a][j]` is the line integral at angle `angles[a]` (covering
/// `[0, pi)` uniformly) and signed offset `(j - (m-1)/2) ds`.
pub fn filtered_backprojection<T: Real>(sinogram: &[Vec<T>], angles: &[T], ds: T, grid: &ReconstructionGrid<T>) -> Result<Vec<T>> {
    if grid.n != 2 || sinogram.len() != angles.len() || sinogram.is_empty() {
        return Err(Error::precondition("filtered backprojection needs n = 2 and one projection per angle"));
    }
    let m = sinogram[0].len();
    let pi = T::PI();
    let kernel = |k: i64| -> T {
        if k == 0 {
            T::one() / (c::<T>(4.0) * ds * ds)
        } else if k % 2 == 0 {
            T::zero()
        } else {
            let kf = T::from_i64(k).unwrap();
            -T::one() / (pi * pi * kf * kf * ds * ds)
        }
    };
    let filtered: Vec<Vec<T>> = sinogram
        .iter()
        .map(|p| {
            (0..m)
                .map(|i| (0..m).map(|j| kernel(i as i64 - j as i64) * p[j]).sum::<T>() * ds)
                .collect()
        })
        .collect();
    let center = T::from_usize_lossy(m - 1) * c(0.5);
    let scale = pi / T::from_usize_lossy(angles.len());
    Ok((0..grid.len())
        .map(|idx| {
            let x = grid.center(idx);
            let mut acc = T::zero();
            for (q, th) in filtered.iter().zip(angles) {
                let s = x[0] * th.cos() + x[1] * th.sin();
                let u = s / ds + center;
                let i0 = u.floor();
                let f = u - i0;
                if let Some(i) = i0.to_i64() {
                    if i >= 0 && (i as usize) + 1 < m {
                        acc += q[i as usize] * (T::one() - f) + q[i as usize + 1] * f;
                    }
                }
            }
            acc * scale
        })
        .collect())
}
