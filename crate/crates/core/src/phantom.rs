//! Analytic density phantoms.

use serde::{Deserialize, Serialize};

use crate::numerics::bump;
use crate::scalar::Real;

/// Anything that can report an atom density at a point of `R^n`.
pub trait DensityModel<T: Real>: Sync {
    fn density(&self, x: &[T]) -> T;

    /// Balls `(center, radius)` whose union contains the support, when known.
    fn support_balls(&self) -> Option<Vec<(Vec<T>, T)>> {
        None
    }

    /// Length scale of the narrowest feature; line quadratures start from
    /// pieces no longer than half of it.
    fn feature_scale(&self) -> Option<T> {
        None
    }

    /// Parameters `s` in `(s0, s1)` where `s -> density(y + s d)` is not
    /// smooth.
    fn kinks(&self, _y: &[T], _d: &[T], _s0: T, _s1: T) -> Vec<T> {
        Vec::new()
    }
}

/// Sorted break points of `[s0, s1]` for integrating the density along the
/// lines `y + s d`: the kinks of every line plus a uniform subdivision at
/// half the feature scale.
pub fn line_breaks<T: Real, M: DensityModel<T> + ?Sized>(rho: &M, lines: &[(&[T], &[T])], s0: T, s1: T) -> Vec<T> {
    let mut out = vec![s0, s1];
    if s1 <= s0 {
        return out;
    }
    if let Some(h) = rho.feature_scale().filter(|h| *h > T::zero()) {
        let m = ((s1 - s0) / (h * T::lit(0.5))).ceil().to_usize().unwrap_or(1).clamp(1, 4000);
        out.extend((1..m).map(|i| s0 + (s1 - s0) * T::from_usize_lossy(i) / T::from_usize_lossy(m)));
    }
    for (y, d) in lines {
        out.extend(rho.kinks(y, d, s0, s1).into_iter().filter(|s| *s > s0 && *s < s1));
    }
    out.sort_by(|a, b| a.partial_cmp(b).expect("finite break points"));
    out.dedup();
    out
}

/// One compactly supported smooth bump `A * exp(1 - 1/(1 - |x-c|^2/r^2))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Bump<T> {
    pub center: Vec<T>,
    pub radius: T,
    pub amplitude: T,
}

/// Gaussian `A * exp(-|x-c|^2 / (2 w^2))` truncated to zero beyond `cutoff`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gaussian<T> {
    pub center: Vec<T>,
    pub width: T,
    pub amplitude: T,
    pub cutoff: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Phantom<T> {
    Zero,
    Bumps { bumps: Vec<Bump<T>> },
    Gaussians { gaussians: Vec<Gaussian<T>> },
}

fn dist2<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum()
}

impl<T: Real> Phantom<T> {
    pub fn bumps(bumps: Vec<Bump<T>>) -> Self {
        Phantom::Bumps { bumps }
    }

    /// Largest distance from the origin of any support point.
    pub fn support_radius(&self) -> T {
        self.support_balls()
            .unwrap_or_default()
            .iter()
            .map(|(c, r)| dist2(c, &vec![T::zero(); c.len()]).sqrt() + *r)
            .fold(T::zero(), T::max)
    }

    pub fn max_value(&self) -> T {
        match self {
            Phantom::Zero => T::zero(),
            Phantom::Bumps { bumps } => bumps.iter().map(|b| b.amplitude).fold(T::zero(), |a, b| a + b),
            Phantom::Gaussians { gaussians } => gaussians.iter().map(|g| g.amplitude).fold(T::zero(), |a, b| a + b),
        }
    }
}

impl<T: Real> DensityModel<T> for Phantom<T> {
    fn density(&self, x: &[T]) -> T {
        match self {
            Phantom::Zero => T::zero(),
            Phantom::Bumps { bumps } => bumps
                .iter()
                .map(|b| {
                    let u2 = dist2(x, &b.center) / (b.radius * b.radius);
                    if u2 >= T::one() {
                        T::zero()
                    } else {
                        b.amplitude * bump(u2.sqrt())
                    }
                })
                .sum(),
            Phantom::Gaussians { gaussians } => gaussians
                .iter()
                .map(|g| {
                    let d2 = dist2(x, &g.center);
                    if d2 >= g.cutoff * g.cutoff {
                        T::zero()
                    } else {
                        g.amplitude * (-d2 / (g.width * g.width * T::lit(2.0))).exp()
                    }
                })
                .sum(),
        }
    }

    fn support_balls(&self) -> Option<Vec<(Vec<T>, T)>> {
        Some(match self {
            Phantom::Zero => Vec::new(),
            Phantom::Bumps { bumps } => bumps.iter().map(|b| (b.center.clone(), b.radius)).collect(),
            Phantom::Gaussians { gaussians } => gaussians.iter().map(|g| (g.center.clone(), g.cutoff)).collect(),
        })
    }

    fn feature_scale(&self) -> Option<T> {
        match self {
            Phantom::Zero => None,
            Phantom::Bumps { bumps } => bumps.iter().map(|b| b.radius).reduce(T::min),
            Phantom::Gaussians { gaussians } => gaussians.iter().map(|g| g.width).reduce(T::min),
        }
    }
}

impl<T: Real, M: DensityModel<T> + ?Sized> DensityModel<T> for &M {
    fn density(&self, x: &[T]) -> T {
        (**self).density(x)
    }

    fn support_balls(&self) -> Option<Vec<(Vec<T>, T)>> {
        (**self).support_balls()
    }

    fn feature_scale(&self) -> Option<T> {
        (**self).feature_scale()
    }

    fn kinks(&self, y: &[T], d: &[T], s0: T, s1: T) -> Vec<T> {
        (**self).kinks(y, d, s0, s1)
    }
}

/// Pointwise sum of two models.
pub struct Sum<A, B>(pub A, pub B);

impl<T: Real, A: DensityModel<T>, B: DensityModel<T>> DensityModel<T> for Sum<A, B> {
    fn density(&self, x: &[T]) -> T {
        self.0.density(x) + self.1.density(x)
    }

    fn support_balls(&self) -> Option<Vec<(Vec<T>, T)>> {
        let mut a = self.0.support_balls()?;
        a.extend(self.1.support_balls()?);
        Some(a)
    }

    fn feature_scale(&self) -> Option<T> {
        match (self.0.feature_scale(), self.1.feature_scale()) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        }
    }

    fn kinks(&self, y: &[T], d: &[T], s0: T, s1: T) -> Vec<T> {
        let mut k = self.0.kinks(y, d, s0, s1);
        k.extend(self.1.kinks(y, d, s0, s1));
        k
    }
}
