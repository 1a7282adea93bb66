use crate::error::{Error, Result};
use crate::phantom::DensityModel;
use crate::scalar::{c, Real};
use crate::spectral::GridSpec;

/// Atom density sampled on the `n`-dimensional photon grid.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField<T: Real> {
    pub n: usize,
    pub points_per_axis: usize,
    pub box_halfwidth: T,
    /// Row-major samples, `N^n` of them.
    pub values: Vec<T>,
}

/// Relative threshold defining the numerical support `Sigma`.
pub const SUPPORT_THRESHOLD: f64 = 1e-6;

impl<T: Real> DensityField<T> {
    /// Validated constructor: nonnegative, finite, and zero within two cells
    /// of the box boundary.
    pub fn new(grid: &GridSpec<T>, values: Vec<T>) -> Result<Self> {
        let field = Self::new_periodic(grid, values)?;
        let np = grid.points_per_axis;
        for (idx, v) in field.values.iter().enumerate() {
            if *v != T::zero() {
                let multi = grid.block_multi_index(idx);
                if multi.iter().any(|&i| i < 2 || i + 2 >= np) {
                    return Err(Error::validation(format!(
                        "density must vanish within 2 cells of the box boundary (index {multi:?})"
                    )));
                }
            }
        }
        Ok(field)
    }

    /// Like [`DensityField::new`] without the compact-support rule; for
    /// periodic test configurations such as constant densities.
    pub fn new_periodic(grid: &GridSpec<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.block_len() {
            return Err(Error::config(format!(
                "density has {} samples, grid block has {}",
                values.len(),
                grid.block_len()
            )));
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= T::zero()) || !v.is_finite()) {
            return Err(Error::validation(format!("density sample {i} is {v}; must be finite and >= 0")));
        }
        Ok(DensityField { n: grid.n, points_per_axis: grid.points_per_axis, box_halfwidth: grid.box_halfwidth, values })
    }

    pub fn zeros(grid: &GridSpec<T>) -> Self {
        DensityField {
            n: grid.n,
            points_per_axis: grid.points_per_axis,
            box_halfwidth: grid.box_halfwidth,
            values: vec![T::zero(); grid.block_len()],
        }
    }

    pub fn uniform_periodic(grid: &GridSpec<T>, value: T) -> Result<Self> {
        Self::new_periodic(grid, vec![value; grid.block_len()])
    }

    pub fn from_model<M: DensityModel<T> + ?Sized>(grid: &GridSpec<T>, model: &M) -> Result<Self> {
        let values = (0..grid.block_len()).map(|i| model.density(&grid.block_point(i))).collect();
        Self::new(grid, values)
    }

    pub fn spacing(&self) -> T {
        self.box_halfwidth * c(2.0) / T::from_usize_lossy(self.points_per_axis)
    }

    fn coordinate(&self, i: usize) -> T {
        -self.box_halfwidth + self.spacing() * T::from_usize_lossy(i)
    }

    pub fn max_value(&self) -> T {
        self.values.iter().fold(T::zero(), |a, &b| a.max(b))
    }

    /// Flat indices of the numerical support `{rho > 1e-6 max rho}`.
    pub fn support_indices(&self) -> Vec<usize> {
        let thr = self.max_value() * c(SUPPORT_THRESHOLD);
        self.values.iter().enumerate().filter(|(_, v)| **v > thr && **v > T::zero()).map(|(i, _)| i).collect()
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for a in (0..self.n).rev() {
            out[a] = idx % self.points_per_axis;
            idx /= self.points_per_axis;
        }
        out
    }

    pub fn point(&self, idx: usize) -> Vec<T> {
        self.multi_index(idx).into_iter().map(|i| self.coordinate(i)).collect()
    }

    /// Largest distance from the origin of a support node plus one cell.
    pub fn support_radius(&self) -> T {
        self.support_indices()
            .into_iter()
            .map(|i| self.point(i).iter().map(|x| *x * *x).sum::<T>().sqrt())
            .fold(T::zero(), T::max)
            + if self.max_value() > T::zero() { self.spacing() } else { T::zero() }
    }

    /// Exact integral of the multilinear interpolant along `[a; b]`
    /// (arc length measure): the segment is split at every cell crossing and
    /// each polynomial piece is integrated by 4-point Gauss-Legendre.
    pub fn segment_integral(&self, a: &[T], b: &[T]) -> T {
        const X: [f64; 4] = [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
        const W: [f64; 4] = [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];
        let d: Vec<T> = a.iter().zip(b).map(|(p, q)| *q - *p).collect();
        let len = d.iter().map(|x| *x * *x).sum::<T>().sqrt();
        if len == T::zero() {
            return T::zero();
        }
        let mut cuts = self.kinks(a, &d, T::zero(), T::one());
        cuts.extend([T::zero(), T::one()]);
        cuts.retain(|t| *t >= T::zero() && *t <= T::one());
        cuts.sort_by(|x, y| x.partial_cmp(y).expect("finite cuts"));
        let mut total = T::zero();
        for w in cuts.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            if t1 <= t0 {
                continue;
            }
            let (mid, half) = ((t0 + t1) * c(0.5), (t1 - t0) * c(0.5));
            for j in 0..4 {
                let t = mid + half * c(X[j]);
                let x: Vec<T> = a.iter().zip(&d).map(|(p, q)| *p + *q * t).collect();
                total += half * c::<T>(W[j]) * self.density(&x);
            }
        }
        total * len
    }

    pub fn sqrt_values(&self) -> Vec<T> {
        self.values.iter().map(|v| v.sqrt()).collect()
    }
}

/// Multilinear interpolation of the samples; zero outside the sampled box.
impl<T: Real> DensityModel<T> for DensityField<T> {
    fn density(&self, x: &[T]) -> T {
        let h = self.spacing();
        let np = self.points_per_axis;
        let mut base = Vec::with_capacity(self.n);
        let mut frac = Vec::with_capacity(self.n);
        for &xi in x.iter().take(self.n) {
            let s = (xi + self.box_halfwidth) / h;
            if !(s >= T::zero()) {
                return T::zero();
            }
            let f = s.floor();
            let i = match f.to_usize() {
                Some(i) if i + 1 < np => i,
                _ => return T::zero(),
            };
            base.push(i);
            frac.push(s - f);
        }
        let mut acc = T::zero();
        for corner in 0..(1usize << self.n) {
            let mut w = T::one();
            let mut idx = 0;
            for a in 0..self.n {
                let bit = (corner >> a) & 1;
                w *= if bit == 1 { frac[a] } else { T::one() - frac[a] };
                idx = idx * np + base[a] + bit;
            }
            if w != T::zero() {
                acc += w * self.values[idx];
            }
        }
        acc
    }

    fn kinks(&self, y: &[T], d: &[T], s0: T, s1: T) -> Vec<T> {
        let h = self.spacing();
        let mut out = Vec::new();
        for k in 0..self.n {
            if d[k] == T::zero() {
                continue;
            }
            let (u0, u1) = ((y[k] + d[k] * s0 + self.box_halfwidth) / h, (y[k] + d[k] * s1 + self.box_halfwidth) / h);
            let mut i = u0.min(u1).ceil();
            while i <= u0.max(u1).floor() {
                out.push((i * h - self.box_halfwidth - y[k]) / d[k]);
                i += T::one();
            }
        }
        out
    }
}
