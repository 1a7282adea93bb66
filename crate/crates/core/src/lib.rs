//! Forward simulation of two-photon scattering from a cloud of two-level
//! atoms, the correlation measurement map, and reconstruction of the atom
//! density from ray-wise line integrals.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the type
//! aliases at the crate root fix the scalar to `f64`, which is what the
//! pipeline and the command-line tool use.

pub mod error;
pub mod evolution;
pub mod geometry;
pub mod measurement;
pub mod numerics;
pub mod phantom;
pub mod pipeline;
pub mod scalar;
pub mod spectral;
pub mod tomography;
pub mod transport;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Grid = spectral::GridSpec<f64>;
pub type Field = spectral::FieldState<f64>;
pub type Plan = spectral::MultiplierPlan<f64>;
pub type Density = evolution::DensityField<f64>;
pub type Physics = evolution::PhysicsParams<f64>;
pub type Source = evolution::SourceSpec<f64>;
