use std::collections::HashMap;

use num_complex::Complex;
use rayon::prelude::*;

use super::{DensityField, PhysicsParams};
use crate::error::{Error, Result};
use crate::numerics::symmetric_eigen;
use crate::scalar::{c, Real};
use crate::spectral::FieldState;

type Mat4<T> = [[Complex<T>; 4]; 4];

/// The real symmetric coupling block at one point, `a = sqrt(rho(x1))`,
/// `b = sqrt(rho(x2))`.
pub fn coupling_matrix<T: Real>(params: &PhysicsParams<T>, a: T, b: T) -> [[T; 4]; 4] {
    let g = params.g;
    let o = params.omega;
    let z = T::zero();
    [
        [z, g * b, g * a, z],
        [g * b, o, z, g * a],
        [g * a, z, o, -g * b],
        [z, g * a, -g * b, o * c(2.0)],
    ]
}

/// Pointwise coupling `B(x1, x2)` for a frozen density.
///
/// `sqrt(rho)` values are deduplicated into slots so that exponentials can
/// be tabulated per slot pair.
#[derive(Clone, Debug)]
pub struct CouplingOperator<T: Real> {
    pub params: PhysicsParams<T>,
    block_len: usize,
    slots: Vec<T>,
    slot_of: Vec<u32>,
}

/// Largest slot-pair table built for `omega > 0`; beyond it exponentials are
/// computed point by point.
const MAX_TABLE_PAIRS: usize = 1 << 18;

impl<T: Real> CouplingOperator<T> {
    pub fn assemble(rho: &DensityField<T>, params: &PhysicsParams<T>) -> Result<Self> {
        params.validate()?;
        if let Some((i, v)) = rho.values.iter().enumerate().find(|(_, v)| !(**v >= T::zero())) {
            return Err(Error::validation(format!("density sample {i} is negative ({v})")));
        }
        let mut slots = vec![T::zero()];
        let mut index: HashMap<u64, u32> = HashMap::new();
        index.insert(T::zero().to_f64_lossy().to_bits(), 0);
        let slot_of = rho
            .values
            .iter()
            .map(|v| {
                let s = v.sqrt();
                *index.entry(s.to_f64_lossy().to_bits()).or_insert_with(|| {
                    slots.push(s);
                    (slots.len() - 1) as u32
                })
            })
            .collect();
        Ok(CouplingOperator { params: *params, block_len: rho.values.len(), slots, slot_of })
    }

    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// Number of distinct `sqrt(rho)` values including zero.
    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    /// `B` at block indices `(i1, i2)`.
    pub fn matrix_at(&self, i1: usize, i2: usize) -> [[T; 4]; 4] {
        coupling_matrix(&self.params, self.slots[self.slot_of[i1] as usize], self.slots[self.slot_of[i2] as usize])
    }

    fn is_density_free(&self) -> bool {
        self.slots.len() == 1 || self.params.g == T::zero()
    }

    /// Precompute `exp(-i dt B)` for repeated application.
    pub fn exponential(&self, dt: T) -> CouplingExp<T> {
        let o = self.params.omega;
        let diag = [T::zero(), o, o, o * c(2.0)].map(|e| Complex::from_polar(T::one(), -dt * e));
        let kind = if self.is_density_free() {
            ExpKind::Diagonal
        } else if o == T::zero() {
            ExpKind::ClosedForm
        } else if self.slots.len() * self.slots.len() <= MAX_TABLE_PAIRS {
            let k = self.slots.len();
            let table = (0..k * k)
                .into_par_iter()
                .map(|p| dense_exponential(&coupling_matrix(&self.params, self.slots[p / k], self.slots[p % k]), dt))
                .collect();
            ExpKind::Table(table)
        } else {
            log::warn!("{} density levels; coupling exponentials computed per point", self.slots.len());
            ExpKind::PerPoint
        };
        CouplingExp { dt, op: self.clone(), diag, kind }
    }
}

/// `V diag(exp(-i dt lambda)) V^T` for a real symmetric 4x4 matrix.
pub fn dense_exponential<T: Real>(m: &[[T; 4]; 4], dt: T) -> Mat4<T> {
    let eig = symmetric_eigen(m);
    let phases = eig.values.map(|l| Complex::from_polar(T::one(), -dt * l));
    let mut out = [[Complex::default(); 4]; 4];
    for (r, row) in out.iter_mut().enumerate() {
        for (col, z) in row.iter_mut().enumerate() {
            *z = (0..4).map(|j| phases[j] * (eig.vectors[r][j] * eig.vectors[col][j])).sum();
        }
    }
    out
}

#[derive(Clone, Debug)]
enum ExpKind<T: Real> {
    Diagonal,
    /// `omega = 0`: `B = g M` with `M^2 = (a^2 + b^2) I`.
    ClosedForm,
    Table(Vec<Mat4<T>>),
    PerPoint,
}

/// Pointwise unitary map `exp(-i dt B(x1, x2))`.
#[derive(Clone, Debug)]
pub struct CouplingExp<T: Real> {
    pub dt: T,
    op: CouplingOperator<T>,
    diag: [Complex<T>; 4],
    kind: ExpKind<T>,
}

impl<T: Real> CouplingExp<T> {
    /// The 4x4 factor at block indices `(i1, i2)`.
    pub fn matrix_at(&self, i1: usize, i2: usize) -> Mat4<T> {
        let (s1, s2) = (self.op.slot_of[i1] as usize, self.op.slot_of[i2] as usize);
        self.factor(s1, s2)
    }

    fn factor(&self, s1: usize, s2: usize) -> Mat4<T> {
        let mut out = [[Complex::default(); 4]; 4];
        if s1 == 0 && s2 == 0 || matches!(self.kind, ExpKind::Diagonal) {
            for k in 0..4 {
                out[k][k] = self.diag[k];
            }
            return out;
        }
        match &self.kind {
            ExpKind::Diagonal => unreachable!(),
            ExpKind::ClosedForm => {
                let (a, b) = (self.op.slots[s1], self.op.slots[s2]);
                let r = (a * a + b * b).sqrt();
                let theta = self.op.params.g * self.dt * r;
                let cs = theta.cos();
                let sr = theta.sin() / r;
                let m = coupling_matrix(&PhysicsParams { g: T::one(), omega: T::zero() }, a, b);
                for (i, row) in out.iter_mut().enumerate() {
                    for (j, z) in row.iter_mut().enumerate() {
                        *z = Complex::new(if i == j { cs } else { T::zero() }, -sr * m[i][j]);
                    }
                }
                out
            }
            ExpKind::Table(t) => t[s1 * self.op.slots.len() + s2],
            ExpKind::PerPoint => {
                dense_exponential(&coupling_matrix(&self.op.params, self.op.slots[s1], self.op.slots[s2]), self.dt)
            }
        }
    }

    /// Apply in place to every grid point of `state`.
    pub fn apply(&self, state: &mut FieldState<T>) -> Result<()> {
        let b = self.op.block_len;
        if state.grid.block_len() != b {
            return Err(Error::config("coupling and field grids differ"));
        }
        if matches!(self.kind, ExpKind::Diagonal) && self.diag.iter().all(|z| *z == Complex::new(T::one(), T::zero())) {
            return Ok(());
        }
        let m = state.grid.len();
        let (u0, rest) = state.data.split_at_mut(m);
        let (u1, rest) = rest.split_at_mut(m);
        let (u2, u3) = rest.split_at_mut(m);
        let slot_of = &self.op.slot_of;
        u0.par_chunks_mut(b)
            .zip(u1.par_chunks_mut(b))
            .zip(u2.par_chunks_mut(b))
            .zip(u3.par_chunks_mut(b))
            .enumerate()
            .for_each(|(i1, (((r0, r1), r2), r3))| {
                let s1 = slot_of[i1] as usize;
                let mut cache: Option<(usize, Mat4<T>)> = None;
                for i2 in 0..b {
                    let s2 = slot_of[i2] as usize;
                    let v = [r0[i2], r1[i2], r2[i2], r3[i2]];
                    if s1 == 0 && s2 == 0 {
                        r0[i2] = v[0] * self.diag[0];
                        r1[i2] = v[1] * self.diag[1];
                        r2[i2] = v[2] * self.diag[2];
                        r3[i2] = v[3] * self.diag[3];
                        continue;
                    }
                    if v.iter().all(|z| *z == Complex::default()) {
                        continue;
                    }
                    let u = match cache {
                        Some((s, u)) if s == s2 => u,
                        _ => {
                            let u = self.factor(s1, s2);
                            cache = Some((s2, u));
                            u
                        }
                    };
                    let w: [Complex<T>; 4] =
                        std::array::from_fn(|r| u[r][0] * v[0] + u[r][1] * v[1] + u[r][2] * v[2] + u[r][3] * v[3]);
                    r0[i2] = w[0];
                    r1[i2] = w[1];
                    r2[i2] = w[2];
                    r3[i2] = w[3];
                }
            });
        Ok(())
    }
}

#[cfg(test)]
/// Coupling for a grid with zero density (no atoms).
pub(crate) fn free_coupling<T: Real>(grid: &crate::spectral::GridSpec<T>, params: &PhysicsParams<T>) -> Result<CouplingOperator<T>> {
    CouplingOperator::assemble(&DensityField::zeros(grid), params)
}
