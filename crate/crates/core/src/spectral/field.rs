use num_complex::Complex;

use super::GridSpec;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Number of amplitude components: two-photon, two photon+atom, two-atom.
pub const COMPONENTS: usize = 4;

/// The vector amplitude `u = (u0, u1, u2, u3)` on the `2n`-dimensional grid at
/// one time.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState<T: Real> {
    pub grid: GridSpec<T>,
    /// Row-major over `(component, x1 axes, x2 axes)`.
    pub data: Vec<Complex<T>>,
    pub time: T,
}

impl<T: Real> FieldState<T> {
    pub fn zeros(grid: &GridSpec<T>) -> Self {
        FieldState { grid: grid.clone(), data: vec![Complex::default(); COMPONENTS * grid.len()], time: T::zero() }
    }

    pub fn from_data(grid: &GridSpec<T>, data: Vec<Complex<T>>, time: T) -> Result<Self> {
        if data.len() != COMPONENTS * grid.len() {
            return Err(Error::config(format!(
                "field payload has {} values, grid expects {}",
                data.len(),
                COMPONENTS * grid.len()
            )));
        }
        Ok(FieldState { grid: grid.clone(), data, time })
    }

    pub fn component(&self, k: usize) -> &[Complex<T>] {
        let m = self.grid.len();
        &self.data[k * m..(k + 1) * m]
    }

    pub fn component_mut(&mut self, k: usize) -> &mut [Complex<T>] {
        let m = self.grid.len();
        &mut self.data[k * m..(k + 1) * m]
    }

    /// Value of component `k` at block indices `(i1, i2)`.
    pub fn at(&self, k: usize, i1: usize, i2: usize) -> Complex<T> {
        self.component(k)[i1 * self.grid.block_len() + i2]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Plain l2 norm of the samples (no volume weighting).
    pub fn norm(&self) -> T {
        self.data.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn component_norm(&self, k: usize) -> T {
        self.component(k).iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(T::zero(), T::max)
    }

    pub fn scale(&mut self, s: Complex<T>) {
        self.data.iter_mut().for_each(|z| *z *= s);
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: Complex<T>, other: &Self) {
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += *b * s);
    }

    /// Particle exchange `x1 <-> x2` combined with the component relabeling
    /// `(u0, u1, u2, u3) -> (u0, u2, u1, -u3)` under which the dynamics are
    /// invariant.
    pub fn exchanged(&self) -> Self {
        let b = self.grid.block_len();
        let m = self.grid.len();
        let mut out = Self::zeros(&self.grid);
        out.time = self.time;
        let sources = [(0usize, T::one()), (2, T::one()), (1, T::one()), (3, -T::one())];
        for (k, (src, sign)) in sources.into_iter().enumerate() {
            let from = &self.data[src * m..(src + 1) * m];
            let to = &mut out.data[k * m..(k + 1) * m];
            for i1 in 0..b {
                for i2 in 0..b {
                    to[i1 * b + i2] = from[i2 * b + i1] * sign;
                }
            }
        }
        out
    }
}

/// Swap the two photon blocks of a single scalar field.
pub fn swap_blocks<T: Real>(data: &[Complex<T>], block: usize) -> Vec<Complex<T>> {
    let mut out = vec![Complex::default(); data.len()];
    for i1 in 0..block {
        for i2 in 0..block {
            out[i1 * block + i2] = data[i2 * block + i1];
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exchange_is_an_involution() {
        let g = GridSpec::new(2, 8, 1.0f64, 0.1, 1.0).unwrap();
        let mut f = FieldState::zeros(&g);
        for (i, z) in f.data.iter_mut().enumerate() {
            *z = Complex::new(i as f64, -(i as f64) * 0.5);
        }
        assert_eq!(f.exchanged().exchanged(), f);
        assert_eq!(swap_blocks(&swap_blocks(f.component(0), 64), 64), f.component(0));
    }

    #[test]
    fn rejects_wrong_payload() {
        let g = GridSpec::new(2, 8, 1.0f64, 0.1, 1.0).unwrap();
        assert!(FieldState::from_data(&g, vec![Complex::default(); 10], 0.0).is_err());
    }
}
