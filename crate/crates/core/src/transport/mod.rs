//! Geometric optics along pairs of straight rays: probe symbols, incident
//! and scattered principal symbols by quadrature and by the transport ODE.

mod batch;
mod probe;
mod symbol;

pub use batch::{evaluate_rays, read_ray_batch, write_ray_results, RayResult};
pub use probe::{richardson, Correction, Extrapolation, ProbeSymbol};
pub use symbol::{
    bicharacteristic, incident_symbol, integrate_transport, line_ratio, scattered_ratio, scattered_symbol, sigma_q,
    transport_ode_solve, PhasePoint, RayPair, VConvention,
};
