//! Small numerical kernels: adaptive quadrature, smooth cutoff profiles and
//! a dense symmetric eigensolver for the per-point coupling matrices.

mod eig;
mod quad;
mod smooth;

pub use eig::{symmetric_eigen, SymmetricEigen};
pub use quad::{integrate, integrate_complex, integrate_partition, integrate_values, Integrand, Quadrature};
pub use smooth::{bump, bump_integral, smooth_step};
