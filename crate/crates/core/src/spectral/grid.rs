use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c, Real};

/// Discretization of `R_t x R^n_{x1} x R^n_{x2}` by a periodic box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec<T> {
    /// Spatial dimension per photon.
    pub n: usize,
    pub points_per_axis: usize,
    /// The box is `[-box_halfwidth, box_halfwidth)` along every axis.
    pub box_halfwidth: T,
    pub dt: T,
    pub t_max: T,
}

impl<T: Real> GridSpec<T> {
    pub fn new(n: usize, points_per_axis: usize, box_halfwidth: T, dt: T, t_max: T) -> Result<Self> {
        let g = GridSpec { n, points_per_axis, box_halfwidth, dt, t_max };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::config(format!("spatial dimension n = {} must be >= 2", self.n)));
        }
        if self.points_per_axis < 8 || self.points_per_axis % 2 != 0 {
            return Err(Error::config(format!(
                "points_per_axis = {} must be even and >= 8",
                self.points_per_axis
            )));
        }
        if !(self.box_halfwidth > T::zero()) || !self.box_halfwidth.is_finite() {
            return Err(Error::config("box_halfwidth must be positive and finite"));
        }
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::config("dt must be positive and finite"));
        }
        if !(self.t_max >= T::zero()) || !self.t_max.is_finite() {
            return Err(Error::config("t_max must be nonnegative and finite"));
        }
        Ok(())
    }

    /// No-wrap rule: waves travel at unit speed, so everything reached before
    /// `t_max` has to stay inside the box.
    pub fn check_no_wrap(&self, support_radius: T) -> Result<()> {
        if self.box_halfwidth > self.t_max + support_radius {
            Ok(())
        } else {
            Err(Error::config(format!(
                "no-wrap rule violated: box_halfwidth {} <= t_max {} + support radius {}",
                self.box_halfwidth, self.t_max, support_radius
            )))
        }
    }

    pub fn spacing(&self) -> T {
        self.box_halfwidth * c(2.0) / T::from_usize_lossy(self.points_per_axis)
    }

    pub fn coordinate(&self, i: usize) -> T {
        -self.box_halfwidth + self.spacing() * T::from_usize_lossy(i)
    }

    /// Angular frequency of FFT bin `k` (FFT ordering).
    pub fn frequency(&self, k: usize) -> T {
        let n = self.points_per_axis;
        let m = if k < n / 2 { k as f64 } else { k as f64 - n as f64 };
        T::PI() / self.box_halfwidth * c(m)
    }

    /// Number of grid points of one photon block (`N^n`).
    pub fn block_len(&self) -> usize {
        self.points_per_axis.pow(self.n as u32)
    }

    /// Number of grid points of the full `2n`-dimensional box.
    pub fn len(&self) -> usize {
        self.block_len() * self.block_len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Volume element of one photon block.
    pub fn cell_volume(&self) -> T {
        self.spacing().powi(self.n as i32)
    }

    /// Row-major multi-index of a block index.
    pub fn block_multi_index(&self, mut idx: usize) -> Vec<usize> {
        let np = self.points_per_axis;
        let mut out = vec![0; self.n];
        for a in (0..self.n).rev() {
            out[a] = idx % np;
            idx /= np;
        }
        out
    }

    pub fn block_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &i| acc * self.points_per_axis + i)
    }

    /// Physical coordinates of a block index.
    pub fn block_point(&self, idx: usize) -> Vec<T> {
        self.block_multi_index(idx).into_iter().map(|i| self.coordinate(i)).collect()
    }

    /// Nearest grid node of a physical point, `None` outside the box.
    pub fn nearest_block_index(&self, x: &[T]) -> Option<usize> {
        if x.len() != self.n {
            return None;
        }
        let h = self.spacing();
        let np = self.points_per_axis;
        let mut multi = Vec::with_capacity(self.n);
        for &xi in x {
            if !(xi >= -self.box_halfwidth && xi < self.box_halfwidth) {
                return None;
            }
            let k = ((xi + self.box_halfwidth) / h).round().to_usize()?;
            multi.push(k.min(np - 1));
        }
        Some(self.block_index(&multi))
    }

    /// Number of time steps covering `[0, t_max]`.
    pub fn step_count(&self) -> usize {
        (self.t_max / self.dt).round().to_usize().unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_small_or_odd_grids() {
        assert!(GridSpec::new(2, 6, 1.0f64, 0.1, 1.0).is_err());
        assert!(GridSpec::new(2, 9, 1.0f64, 0.1, 1.0).is_err());
        assert!(GridSpec::new(1, 8, 1.0f64, 0.1, 1.0).is_err());
        assert!(GridSpec::new(2, 8, 1.0f64, 0.0, 1.0).is_err());
        assert!(GridSpec::new(2, 24, 1.0f64, 0.1, 1.0).is_ok());
    }

    #[test]
    fn no_wrap_rule() {
        let g = GridSpec::new(2, 8, 2.0f64, 0.1, 1.0).unwrap();
        assert!(g.check_no_wrap(0.5).is_ok());
        let err = g.check_no_wrap(1.5).unwrap_err();
        assert!(err.to_string().contains("no-wrap"));
    }

    #[test]
    fn index_round_trip() {
        let g = GridSpec::new(3, 8, 1.0f64, 0.1, 1.0).unwrap();
        for idx in [0, 7, 64, 511] {
            assert_eq!(g.block_index(&g.block_multi_index(idx)), idx);
        }
        let p = g.block_point(g.block_index(&[4, 0, 2]));
        assert_eq!(g.nearest_block_index(&p), Some(g.block_index(&[4, 0, 2])));
        assert_eq!(g.nearest_block_index(&[1.5, 0.0, 0.0]), None);
    }

    #[test]
    fn frequencies_in_fft_order() {
        let g = GridSpec::new(2, 8, 1.0f64, 0.1, 1.0).unwrap();
        let f: Vec<f64> = (0..8).map(|k| g.frequency(k) / std::f64::consts::PI).collect();
        assert_eq!(f, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
    }
}
