use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::spectral::{FieldState, GridSpec};

/// Detector points `W1`, the weight `chi` on the `x2` block, and the sample
/// times.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorSpec<T> {
    pub w1_points: Vec<Vec<T>>,
    /// `chi` at every node of the `x2` block.
    pub chi: Vec<T>,
    pub times: Vec<T>,
}

impl<T: Real> DetectorSpec<T> {
    pub fn new(grid: &GridSpec<T>, w1_points: Vec<Vec<T>>, chi: Vec<T>, times: Vec<T>) -> Result<Self> {
        let d = DetectorSpec { w1_points, chi, times };
        d.validate(grid)?;
        Ok(d)
    }

    /// Sample a weight function on the grid.
    pub fn with_weight<F: Fn(&[T]) -> T>(grid: &GridSpec<T>, w1_points: Vec<Vec<T>>, chi: F, times: Vec<T>) -> Result<Self> {
        let chi = (0..grid.block_len()).map(|i| chi(&grid.block_point(i))).collect();
        Self::new(grid, w1_points, chi, times)
    }

    pub fn validate(&self, grid: &GridSpec<T>) -> Result<()> {
        if self.chi.len() != grid.block_len() {
            return Err(Error::config(format!(
                "chi has {} samples, grid block has {}",
                self.chi.len(),
                grid.block_len()
            )));
        }
        let np = grid.points_per_axis;
        for (i, v) in self.chi.iter().enumerate() {
            if !(*v >= T::zero()) || !v.is_finite() {
                return Err(Error::validation(format!("chi sample {i} is {v}; must be finite and >= 0")));
            }
            if *v != T::zero() && grid.block_multi_index(i).iter().any(|&k| k < 2 || k + 2 >= np) {
                return Err(Error::validation("chi must vanish within 2 cells of the box boundary"));
            }
        }
        self.w1_indices(grid)?;
        Ok(())
    }

    /// Nearest grid node of every `W1` point.
    pub fn w1_indices(&self, grid: &GridSpec<T>) -> Result<Vec<usize>> {
        self.w1_points
            .iter()
            .map(|p| {
                grid.nearest_block_index(p)
                    .ok_or_else(|| Error::config(format!("W1 point {p:?} lies outside the grid")))
            })
            .collect()
    }

    /// Largest distance of a detector point or of `supp chi` from the origin.
    pub fn support_radius(&self, grid: &GridSpec<T>) -> T {
        let norm = |p: &[T]| p.iter().map(|x| *x * *x).sum::<T>().sqrt();
        let r1 = self.w1_points.iter().map(|p| norm(p)).fold(T::zero(), T::max);
        let r2 = (0..self.chi.len())
            .filter(|&i| self.chi[i] > T::zero())
            .map(|i| norm(&grid.block_point(i)))
            .fold(T::zero(), T::max);
        r1.max(r2)
    }
}

fn check_pair<T: Real>(u: &FieldState<T>, v: &FieldState<T>) -> Result<()> {
    if u.grid.n != v.grid.n || u.grid.points_per_axis != v.grid.points_per_axis || u.grid.box_halfwidth != v.grid.box_halfwidth {
        return Err(Error::config("fields live on different grids"));
    }
    Ok(())
}

/// `m(u0, v0)(t, x1) = int chi(x2) u0 conj(v0) dx2` at every `W1` point, by the
/// rectangle rule on the periodic grid (equal to the trapezoidal rule since
/// `chi` vanishes at the box faces).
pub fn pairing_m<T: Real>(u: &FieldState<T>, v: &FieldState<T>, det: &DetectorSpec<T>) -> Result<Vec<Complex<T>>> {
    check_pair(u, v)?;
    det.validate(&u.grid)?;
    let b = u.grid.block_len();
    let dv = u.grid.cell_volume();
    let (u0, v0) = (u.component(0), v.component(0));
    Ok(det
        .w1_indices(&u.grid)?
        .into_iter()
        .map(|i1| {
            let ru = &u0[i1 * b..(i1 + 1) * b];
            let rv = &v0[i1 * b..(i1 + 1) * b];
            let s: Complex<T> = ru.iter().zip(rv).zip(&det.chi).map(|((a, b), w)| *a * b.conj() * *w).sum();
            s * dv
        })
        .collect())
}

/// `Lambda`: the intensity `m(u0, u0)`, real and nonnegative.
pub fn apply_lambda<T: Real>(u: &FieldState<T>, det: &DetectorSpec<T>) -> Result<Vec<T>> {
    det.validate(&u.grid)?;
    let b = u.grid.block_len();
    let dv = u.grid.cell_volume();
    let u0 = u.component(0);
    Ok(det
        .w1_indices(&u.grid)?
        .into_iter()
        .map(|i1| {
            let row = &u0[i1 * b..(i1 + 1) * b];
            row.iter().zip(&det.chi).map(|(a, w)| a.norm_sqr() * *w).sum::<T>() * dv
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn setup() -> (GridSpec<f64>, DetectorSpec<f64>) {
        let grid = GridSpec::new(2, 12, 1.5, 0.1, 0.5).unwrap();
        let det = DetectorSpec::with_weight(
            &grid,
            vec![vec![0.0, 0.0], vec![0.5, -0.25]],
            |x: &[f64]| (1.0 - (x[0] * x[0] + x[1] * x[1])).max(0.0),
            vec![0.5],
        )
        .unwrap();
        (grid, det)
    }

    #[test]
    fn zero_field_zero_intensity() {
        let (grid, det) = setup();
        assert_eq!(apply_lambda(&FieldState::zeros(&grid), &det).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn lambda_is_the_diagonal_pairing() {
        let (grid, det) = setup();
        let mut u = FieldState::zeros(&grid);
        for (i, z) in u.data.iter_mut().enumerate() {
            *z = Complex::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos());
        }
        let l = apply_lambda(&u, &det).unwrap();
        let m = pairing_m(&u, &u, &det).unwrap();
        for (a, b) in l.iter().zip(&m) {
            assert!((a - b.re).abs() <= 1e-14 * a.abs() && b.im.abs() < 1e-14 * a.abs());
        }
    }

    #[test]
    fn outside_point_is_config_error() {
        let (grid, mut det) = setup();
        det.w1_points.push(vec![3.0, 0.0]);
        assert!(matches!(apply_lambda(&FieldState::zeros(&grid), &det), Err(Error::Config(_))));
    }

    #[test]
    fn weight_near_boundary_rejected() {
        let grid = GridSpec::new(2, 12, 1.5, 0.1, 0.5).unwrap();
        assert!(DetectorSpec::with_weight(&grid, vec![], |_| 1.0, vec![]).is_err());
    }
}
