//! The correlation detector: `Lambda f(t, x1) = int chi(x2) |u0|^2 dx2`, the
//! sesquilinear pairing `m(u, v)`, and recovery of the pairing from four
//! `Lambda` measurements.

mod conormal;
mod detector;
mod polarization;
mod record;

pub use conormal::{conormal_pairing_symbol, inverse_fourier_eta, repair_factor, DirectionQuadrature, RepairCheck};
pub use detector::{apply_lambda, pairing_m, DetectorSpec};
pub use polarization::{polarization_recover, LambdaOracle, SolverOracle};
pub use record::{MeasurementKind, MeasurementRecord};
