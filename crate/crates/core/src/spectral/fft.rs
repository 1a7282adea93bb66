use std::ops::Range;
use std::sync::Arc;

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::scalar::Real;

/// 1-D transforms of length `N` shared by every axis of a cubic grid.
pub(crate) struct AxisFft<T: Real> {
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    len: usize,
}

impl<T: Real> AxisFft<T> {
    pub fn new(len: usize) -> Self {
        let mut planner = FftPlanner::new();
        AxisFft {
            forward: planner.plan_fft(len, FftDirection::Forward),
            inverse: planner.plan_fft(len, FftDirection::Inverse),
            len,
        }
    }

    /// Unitary transform of a `rank`-dimensional cube stored row-major in
    /// `data`, along the axes in `axes` only.  Lines that are identically
    /// zero are skipped (their transform is zero).
    pub fn transform(&self, data: &mut [Complex<T>], rank: usize, axes: Range<usize>, dir: FftDirection) {
        let n = self.len;
        debug_assert_eq!(data.len(), n.pow(rank as u32));
        let fft = match dir {
            FftDirection::Forward => &self.forward,
            FftDirection::Inverse => &self.inverse,
        };
        let scale = T::one() / T::from_usize_lossy(n).sqrt();
        let scratch_len = fft.get_inplace_scratch_len();
        for axis in axes {
            let stride = n.pow((rank - 1 - axis) as u32);
            let outer = data.len() / (n * stride);
            // columns of one outer slab handled together, gathered into a
            // contiguous buffer so that rustfft can batch them
            let width = stride.min(COLUMN_BATCH);
            let batches = stride.div_ceil(width);
            let ptr = SharedMut(data.as_mut_ptr());
            (0..outer * batches).into_par_iter().for_each_init(
                || (vec![Complex::default(); n * width], vec![Complex::default(); scratch_len], vec![false; width]),
                |(buf, scratch, live), item| {
                    let base = (item / batches) * n * stride;
                    let c0 = (item % batches) * width;
                    let cols = width.min(stride - c0);
                    let p = ptr.get();
                    // SAFETY: distinct work items address disjoint element
                    // sets {base + j*stride + c}, all inside `data`.
                    let mut any = false;
                    for c in 0..cols {
                        let mut nz = false;
                        for j in 0..n {
                            let v = unsafe { *p.add(base + j * stride + c0 + c) };
                            nz |= v.re != T::zero() || v.im != T::zero();
                            buf[c * n + j] = v;
                        }
                        live[c] = nz;
                        any |= nz;
                    }
                    if !any {
                        return;
                    }
                    fft.process_with_scratch(&mut buf[..cols * n], scratch);
                    for c in 0..cols {
                        if !live[c] {
                            continue;
                        }
                        for j in 0..n {
                            unsafe { *p.add(base + j * stride + c0 + c) = buf[c * n + j] * scale };
                        }
                    }
                },
            );
        }
    }
}

const COLUMN_BATCH: usize = 64;

#[derive(Clone, Copy)]
struct SharedMut<T>(*mut T);

impl<T> SharedMut<T> {
    fn get(self) -> *mut T {
        self.0
    }
}

unsafe impl<T: Send> Send for SharedMut<T> {}
unsafe impl<T: Send> Sync for SharedMut<T> {}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_dft_2d(x: &[Complex<f64>], n: usize) -> Vec<Complex<f64>> {
        let mut out = vec![Complex::default(); n * n];
        let w = -2.0 * std::f64::consts::PI / n as f64;
        for k0 in 0..n {
            for k1 in 0..n {
                let mut acc = Complex::default();
                for j0 in 0..n {
                    for j1 in 0..n {
                        let ph = w * ((k0 * j0 + k1 * j1) as f64);
                        acc += x[j0 * n + j1] * Complex::new(ph.cos(), ph.sin());
                    }
                }
                out[k0 * n + k1] = acc / n as f64;
            }
        }
        out
    }

    #[test]
    fn matches_dense_dft() {
        let n = 8;
        let x: Vec<Complex<f64>> =
            (0..n * n).map(|i| Complex::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos())).collect();
        let mut y = x.clone();
        AxisFft::new(n).transform(&mut y, 2, 0..2, FftDirection::Forward);
        let oracle = dense_dft_2d(&x, n);
        for (a, b) in y.iter().zip(&oracle) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn partial_axes_round_trip() {
        let n: usize = 8;
        let x: Vec<Complex<f64>> = (0..n.pow(4)).map(|i| Complex::new((i as f64).sqrt(), 1.0)).collect();
        let mut y = x.clone();
        let f = AxisFft::new(n);
        f.transform(&mut y, 4, 1..3, FftDirection::Forward);
        f.transform(&mut y, 4, 1..3, FftDirection::Inverse);
        for (a, b) in y.iter().zip(&x) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
