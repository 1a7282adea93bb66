//! Periodic grids, unitary discrete Fourier transforms and the half-Laplacian
//! multipliers acting on the two photon coordinate blocks.
//!
//! The `2n`-dimensional box `[-l, l)^{2n}` is sampled with `N` points per axis.
//! Field data are stored row-major over `(component, x1 axes, x2 axes)`.

mod fft;
mod field;
mod grid;
mod multiplier;
mod snapshot;

pub use field::{swap_blocks, FieldState, COMPONENTS};
pub use grid::GridSpec;
pub use multiplier::{FreeFlow, HalfLaplacian, MultiplierPlan, Sponge};
pub use snapshot::{read_snapshot, write_snapshot, SnapshotHeader};
