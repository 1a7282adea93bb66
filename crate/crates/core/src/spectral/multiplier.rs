use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use super::fft::AxisFft;
use super::{FieldState, GridSpec, COMPONENTS};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Which half-Laplacian to apply: `L1`, `L2`, or `L = L1 + L2`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HalfLaplacian {
    X1,
    X2,
    Both,
}

/// Frequency grids and transform plans for one [`GridSpec`].
///
/// Read-only after construction; share it freely between threads.
pub struct MultiplierPlan<T: Real> {
    grid: GridSpec<T>,
    /// Angular frequency of every FFT bin along one axis.
    pub axis_frequencies: Vec<T>,
    /// `|xi_1|` over the x1 block in FFT ordering.
    pub abs_xi1: Vec<T>,
    /// `|xi_2|` over the x2 block in FFT ordering.
    pub abs_xi2: Vec<T>,
    fft: AxisFft<T>,
}

/// Precomputed phase factors of `exp(-i dt L1)` and `exp(-i dt L2)`.
#[derive(Clone, Debug)]
pub struct FreeFlow<T: Real> {
    pub dt: T,
    phase1: Vec<Complex<T>>,
    phase2: Vec<Complex<T>>,
}

impl<T: Real> MultiplierPlan<T> {
    pub fn new(grid: &GridSpec<T>) -> Result<Self> {
        grid.validate()?;
        let np = grid.points_per_axis;
        let axis_frequencies: Vec<T> = (0..np).map(|k| grid.frequency(k)).collect();
        let abs_xi: Vec<T> = (0..grid.block_len())
            .map(|idx| {
                grid.block_multi_index(idx)
                    .into_iter()
                    .map(|k| axis_frequencies[k] * axis_frequencies[k])
                    .sum::<T>()
                    .sqrt()
            })
            .collect();
        Ok(MultiplierPlan {
            grid: grid.clone(),
            axis_frequencies,
            abs_xi1: abs_xi.clone(),
            abs_xi2: abs_xi,
            fft: AxisFft::new(np),
        })
    }

    pub fn grid(&self) -> &GridSpec<T> {
        &self.grid
    }

    fn check(&self, state: &FieldState<T>) -> Result<()> {
        if state.grid.n != self.grid.n || state.grid.points_per_axis != self.grid.points_per_axis {
            return Err(Error::config(format!(
                "field grid (n={}, N={}) does not match plan (n={}, N={})",
                state.grid.n, state.grid.points_per_axis, self.grid.n, self.grid.points_per_axis
            )));
        }
        Ok(())
    }

    fn rank(&self) -> usize {
        2 * self.grid.n
    }

    /// Unitary transform of one scalar field over the axes of the chosen block(s).
    pub(crate) fn transform_scalar(&self, data: &mut [Complex<T>], which: HalfLaplacian, dir: FftDirection) {
        let n = self.grid.n;
        let axes = match which {
            HalfLaplacian::X1 => 0..n,
            HalfLaplacian::X2 => n..2 * n,
            HalfLaplacian::Both => 0..2 * n,
        };
        self.fft.transform(data, self.rank(), axes, dir);
    }

    /// Unitary DFT of every component over all `2n` axes.
    pub fn forward_transform(&self, state: &FieldState<T>) -> Result<FieldState<T>> {
        self.check(state)?;
        let mut out = state.clone();
        let m = self.grid.len();
        for k in 0..COMPONENTS {
            self.transform_scalar(&mut out.data[k * m..(k + 1) * m], HalfLaplacian::Both, FftDirection::Forward);
        }
        Ok(out)
    }

    pub fn inverse_transform(&self, spectrum: &FieldState<T>) -> Result<FieldState<T>> {
        self.check(spectrum)?;
        let mut out = spectrum.clone();
        let m = self.grid.len();
        for k in 0..COMPONENTS {
            self.transform_scalar(&mut out.data[k * m..(k + 1) * m], HalfLaplacian::Both, FftDirection::Inverse);
        }
        Ok(out)
    }

    /// Multiply the spectrum of every component by `|xi1|`, `|xi2|` or
    /// `|xi1| + |xi2|`.
    pub fn apply_half_laplacian(&self, state: &FieldState<T>, which: HalfLaplacian) -> Result<FieldState<T>> {
        let mut spec = self.forward_transform(state)?;
        let b = self.grid.block_len();
        for k in 0..COMPONENTS {
            let comp = spec.component_mut(k);
            comp.par_chunks_mut(b).enumerate().for_each(|(i1, row)| {
                for (i2, z) in row.iter_mut().enumerate() {
                    let sym = match which {
                        HalfLaplacian::X1 => self.abs_xi1[i1],
                        HalfLaplacian::X2 => self.abs_xi2[i2],
                        HalfLaplacian::Both => self.abs_xi1[i1] + self.abs_xi2[i2],
                    };
                    *z = *z * sym;
                }
            });
        }
        self.inverse_transform(&spec)
    }

    pub fn free_flow(&self, dt: T) -> FreeFlow<T> {
        let phase = |xs: &[T]| xs.iter().map(|&x| Complex::from_polar(T::one(), -dt * x)).collect();
        FreeFlow { dt, phase1: phase(&self.abs_xi1), phase2: phase(&self.abs_xi2) }
    }

    /// `exp(-i dt diag(L, L1, L2, 0))` applied out of place.
    pub fn free_propagate(&self, state: &FieldState<T>, dt: T) -> Result<FieldState<T>> {
        self.check(state)?;
        let mut out = state.clone();
        self.apply_free_flow(&self.free_flow(dt), &mut out);
        Ok(out)
    }

    /// In-place free flow.  Component 0 is transformed over all axes,
    /// components 1 and 2 only over the block their multiplier acts on, and
    /// component 3 is left alone.
    pub fn apply_free_flow(&self, flow: &FreeFlow<T>, state: &mut FieldState<T>) {
        let b = self.grid.block_len();
        let m = self.grid.len();
        let (u0, rest) = state.data.split_at_mut(m);
        let (u1, rest) = rest.split_at_mut(m);
        let u2 = &mut rest[..m];

        if u0.iter().any(|z| *z != Complex::default()) {
            self.transform_scalar(u0, HalfLaplacian::Both, FftDirection::Forward);
            u0.par_chunks_mut(b).enumerate().for_each(|(i1, row)| {
                let p1 = flow.phase1[i1];
                for (z, p2) in row.iter_mut().zip(&flow.phase2) {
                    *z = *z * p1 * *p2;
                }
            });
            self.transform_scalar(u0, HalfLaplacian::Both, FftDirection::Inverse);
        }
        if u1.iter().any(|z| *z != Complex::default()) {
            self.transform_scalar(u1, HalfLaplacian::X1, FftDirection::Forward);
            u1.par_chunks_mut(b).enumerate().for_each(|(i1, row)| {
                let p1 = flow.phase1[i1];
                row.iter_mut().for_each(|z| *z = *z * p1);
            });
            self.transform_scalar(u1, HalfLaplacian::X1, FftDirection::Inverse);
        }
        if u2.iter().any(|z| *z != Complex::default()) {
            self.transform_scalar(u2, HalfLaplacian::X2, FftDirection::Forward);
            u2.par_chunks_mut(b).for_each(|row| {
                for (z, p2) in row.iter_mut().zip(&flow.phase2) {
                    *z = *z * *p2;
                }
            });
            self.transform_scalar(u2, HalfLaplacian::X2, FftDirection::Inverse);
        }
        state.time += flow.dt;
    }
}

/// Optional absorbing taper near the box faces (off by default).
#[derive(Clone, Debug)]
pub struct Sponge<T: Real> {
    block_mask: Vec<T>,
}

impl<T: Real> Sponge<T> {
    /// Cosine taper of the given physical `width` on every face, applied once
    /// per step with strength `strength` in `(0, 1]`.
    pub fn new(grid: &GridSpec<T>, width: T, strength: T) -> Self {
        let axis: Vec<T> = (0..grid.points_per_axis)
            .map(|i| {
                let x = grid.coordinate(i);
                let d = grid.box_halfwidth - x.abs();
                if d >= width {
                    T::one()
                } else {
                    let s = (T::FRAC_PI_2() * d / width).sin();
                    T::one() - strength * (T::one() - s * s)
                }
            })
            .collect();
        let block_mask = (0..grid.block_len())
            .map(|idx| grid.block_multi_index(idx).into_iter().map(|i| axis[i]).fold(T::one(), |a, b| a * b))
            .collect();
        Sponge { block_mask }
    }

    pub fn apply(&self, state: &mut FieldState<T>) {
        let b = self.block_mask.len();
        state.data.par_chunks_mut(b).enumerate().for_each(|(row, chunk)| {
            let m1 = self.block_mask[row % b];
            for (z, m2) in chunk.iter_mut().zip(&self.block_mask) {
                *z = *z * (m1 * *m2);
            }
        });
    }

    pub fn min_factor(&self) -> T {
        self.block_mask.iter().fold(T::one(), |a, &b| a.min(b))
    }
}
