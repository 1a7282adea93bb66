use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Atom-photon coupling `g` and atomic transition frequency `omega`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams<T> {
    pub g: T,
    pub omega: T,
}

impl<T: Real> PhysicsParams<T> {
    pub fn new(g: T, omega: T) -> Result<Self> {
        let p = PhysicsParams { g, omega };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.g >= T::zero()) || !(self.omega >= T::zero()) || !self.g.is_finite() || !self.omega.is_finite() {
            return Err(Error::validation(format!(
                "g = {} and omega = {} must be finite and nonnegative",
                self.g, self.omega
            )));
        }
        Ok(())
    }
}
