//! Time integration of the symmetrized four-component system
//! `i du/dt = (L + B) u + f` by Strang splitting between the diagonal
//! half-wave flow and the pointwise Hermitian coupling.

mod coupling;
mod density;
mod params;
mod source;
mod stepper;

pub use coupling::{coupling_matrix, dense_exponential, CouplingExp, CouplingOperator};
pub use density::DensityField;
pub use params::PhysicsParams;
pub use source::{SourceSpec, TemporalWindow, WavePacket};
pub use stepper::{evolve, evolve_with, EvolveOptions, Stepper, Trajectory};
