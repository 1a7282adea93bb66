use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{bump, bump_integral, smooth_step};
use crate::scalar::{c, Real};

/// Smooth additive correction `amplitude * bump` supported in `(a, b)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Correction<T> {
    pub a: T,
    pub b: T,
    pub amplitude: T,
}

/// Principal symbol of the probe source,
/// `mu(t) (Theta(w1) + Theta(w2)) nu(s1) nu(s2)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSymbol<T> {
    pub eps: T,
    /// Concentration of the von Mises profile `exp(kappa (w . w* - 1))`.
    pub concentration: T,
    pub center: Vec<T>,
    /// Decay exponent `l` of `nu`.
    pub exponent: i32,
    pub correction: Option<Correction<T>>,
}

impl<T: Real> ProbeSymbol<T> {
    /// Default exponent `l = n + 4`.
    pub fn new(eps: T, concentration: T, center: Vec<T>) -> Result<Self> {
        let exponent = center.len() as i32 + 4;
        let p = ProbeSymbol { eps, concentration, center, exponent, correction: None };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > T::zero() && self.eps < c(0.5)) {
            return Err(Error::validation(format!("probe eps must lie in (0, 1/2), got {}", self.eps)));
        }
        if !(self.concentration >= T::zero()) {
            return Err(Error::validation("probe concentration must be >= 0"));
        }
        let norm: T = self.center.iter().map(|x| *x * *x).sum::<T>().sqrt();
        if (norm - T::one()).abs() > c(1e-12) {
            return Err(Error::validation(format!("probe center must be a unit vector, |w*| = {norm}")));
        }
        if let Some(k) = &self.correction {
            if !(self.eps <= k.a && k.a < k.b) {
                return Err(Error::validation("correction support must satisfy eps <= a < b"));
            }
        }
        Ok(())
    }

    /// Temporal profile, a bump on `(eps, 2 eps)` with unit integral.
    pub fn mu(&self, s: T) -> T {
        let half = self.eps * c(0.5);
        bump((s - self.eps * c(1.5)) / half) / (half * bump_integral::<T>())
    }

    pub fn theta(&self, w: &[T]) -> T {
        let dot: T = w.iter().zip(&self.center).map(|(a, b)| *a * *b).sum();
        (self.concentration * (dot - T::one())).exp()
    }

    /// `nu_eps(s) = smooth_step((s - eps)/(1 - eps)) s^-l`, plus the correction.
    pub fn nu(&self, s: T) -> T {
        let base = if s <= self.eps { T::zero() } else { smooth_step((s - self.eps) / (T::one() - self.eps)) * s.powi(-self.exponent) };
        match &self.correction {
            Some(k) => {
                let mid = (k.a + k.b) * c(0.5);
                let half = (k.b - k.a) * c(0.5);
                base + k.amplitude * bump((s - mid) / half)
            }
            None => base,
        }
    }

    /// Time-independent factor `(Theta(k1) + Theta(k2)) nu(s1) nu(s2)`.
    pub fn amplitude(&self, k1: &[T], k2: &[T], s1: T, s2: T) -> T {
        (self.theta(k1) + self.theta(k2)) * self.nu(s1) * self.nu(s2)
    }
}

/// Result of extrapolating a sequence computed at concentrations
/// `kappa, 2 kappa, 4 kappa` to infinite concentration.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Extrapolation<T> {
    pub values: [T; 3],
    /// Observed order in `1/kappa`.
    pub order: T,
    pub limit: T,
    pub error_estimate: T,
}

/// Richardson extrapolation from three values at geometrically doubled
/// concentrations. The order is estimated from the differences and
/// clamped to `[0.5, 4]`; first order is assumed when the differences do
/// not have a consistent sign.
pub fn richardson<T: Real>(values: [T; 3]) -> Extrapolation<T> {
    let d1 = values[1] - values[0];
    let d2 = values[2] - values[1];
    let order = if d1 != T::zero() && d2 != T::zero() && (d1 / d2) > T::zero() {
        (d1 / d2).log2().max(c(0.5)).min(c(4.0))
    } else {
        T::one()
    };
    let factor = c::<T>(2.0).powf(order) - T::one();
    let correction = d2 / factor;
    Extrapolation { values, order, limit: values[2] + correction, error_estimate: correction.abs() }
}
