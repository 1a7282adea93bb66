//! Manifest-driven orchestration of the simulation, measurement, geometry
//! and reconstruction stages.

mod commands;
mod manifest;
mod suite;

pub use commands::{extract_data, geometry_witness, run_command, Command, Outcome, Overrides};
pub use manifest::{
    DetectorManifest, ExtractionMethod, GeometryManifest, OutputSpec, RayManifest, ReconstructionManifest, RunManifest,
    SolverProbeManifest,
};
pub use suite::{fit_slope, run_suite, SuiteRow};
