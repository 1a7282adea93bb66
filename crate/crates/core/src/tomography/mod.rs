//! Line-integral extraction and X-ray inversion.

mod datum;
mod extract;
mod matrix;
mod plan;
mod reconstruct;

pub use datum::{read_ray_data, write_ray_data, Method, RayDatum};
pub use extract::{
    datum_from_traces, extract_from_solver, extract_from_symbols, line_integral, peak_ratio, quadrature_data, Extraction,
    SolverProbe,
};
pub use matrix::{build_ray_matrix, segment_row, ReconstructionGrid, SparseMatrix};
pub use plan::{plan_rays, verify_planned_ray, PlanCounts, PlannedRay, RayPlan};
pub use reconstruct::{filtered_backprojection, read_density, reconstruct, solve, write_density, write_pgm, Reconstruction};
