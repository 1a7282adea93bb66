use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::manifest::{ExtractionMethod, RunManifest};
use super::suite::{run_suite, SuiteRow};
use crate::error::{Error, Result};
use crate::evolution::{evolve, DensityField};
use crate::geometry::{check_condition1, construct_y2_x2, ConditionWitness, Region};
use crate::measurement::{polarization_recover, MeasurementRecord, SolverOracle};
use crate::phantom::DensityModel;
use crate::tomography::{
    extract_from_solver, extract_from_symbols, plan_rays, read_ray_data, reconstruct, write_density, write_pgm,
    write_ray_data, Extraction, RayPlan,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Simulate,
    Measure,
    CheckGeometry,
    Extract,
    Reconstruct,
    Validate,
}

impl Command {
    pub const ALL: [Command; 6] =
        [Command::Simulate, Command::Measure, Command::CheckGeometry, Command::Extract, Command::Reconstruct, Command::Validate];

    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Measure => "measure",
            Command::CheckGeometry => "check-geometry",
            Command::Extract => "extract",
            Command::Reconstruct => "reconstruct",
            Command::Validate => "validate",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|c| c.name() == s)
    }
}

/// Per-invocation overrides of manifest values.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub method: Option<ExtractionMethod>,
    pub lambda_reg: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub artifacts: Vec<PathBuf>,
    /// False when the command ran but its verdict is negative (a failed
    /// geometric condition, a failed suite row).
    pub success: bool,
    pub summary: String,
}

fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<PathBuf> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    fs::write(path, text + "\n")?;
    Ok(path.to_path_buf())
}

pub fn run_command(manifest: &RunManifest, command: Command, out: &Path, overrides: &Overrides) -> Result<Outcome> {
    manifest.validate()?;
    fs::create_dir_all(out)?;
    match command {
        Command::Simulate => simulate(manifest, out),
        Command::Measure => measure(manifest, out),
        Command::CheckGeometry => check_geometry(manifest, out),
        Command::Extract => extract(manifest, out, overrides),
        Command::Reconstruct => reconstruct_cmd(manifest, out, overrides),
        Command::Validate => validate(manifest, out),
    }
}

#[derive(Serialize)]
struct SimulationSummary {
    steps: usize,
    max_norm: f64,
    snapshot_norms: Vec<(f64, f64)>,
}

fn simulate(m: &RunManifest, out: &Path) -> Result<Outcome> {
    let rho = m.density()?;
    let traj = evolve(&rho, &m.physics, &m.source(), &m.grid, &m.output.snapshot_times)?;
    let mut artifacts = traj.write(&out.join("trajectory"))?;
    let summary = SimulationSummary {
        steps: traj.steps,
        max_norm: traj.max_norm,
        snapshot_norms: traj.snapshots.iter().map(|s| (s.time, s.norm())).collect(),
    };
    artifacts.push(write_json(&out.join("simulation.json"), &summary)?);
    Ok(Outcome {
        artifacts,
        success: true,
        summary: format!("{} steps, {} snapshots, max norm {:.6e}", traj.steps, traj.snapshots.len(), traj.max_norm),
    })
}

fn measure(m: &RunManifest, out: &Path) -> Result<Outcome> {
    let det = m.detector_spec()?;
    let rho = m.density()?;
    let oracle = SolverOracle::new(&rho, m.physics, m.grid.clone(), &det);
    let source = m.source();
    let mut lambda = crate::measurement::LambdaOracle::lambda(&oracle, &source)?;
    lambda.source_id = "manifest".into();
    lambda.density_id = "phantom".into();
    let mut artifacts = Vec::new();
    let path = out.join("lambda.csv");
    lambda.write_csv(BufWriter::new(fs::File::create(&path)?))?;
    artifacts.push(path);
    let mut summary = format!("Lambda at {} times x {} points", lambda.times.len(), lambda.w1_indices.len());
    if source.packets.len() >= 2 {
        let f = crate::evolution::SourceSpec::single(source.packets[0].clone());
        let h = crate::evolution::SourceSpec::single(source.packets[1].clone());
        let mut pairing: MeasurementRecord<f64> = polarization_recover(&f, &h, &oracle)?;
        pairing.source_id = "packet0,packet1".into();
        pairing.density_id = "phantom".into();
        let path = out.join("pairing.csv");
        pairing.write_csv(BufWriter::new(fs::File::create(&path)?))?;
        artifacts.push(path);
        summary.push_str("; pairing of packets 0 and 1 by polarization");
    }
    Ok(Outcome { artifacts, success: true, summary })
}

/// Sigma from the geometry density and the witness, with the `Y_2`/`X_2`
/// construction attached when the condition holds.
pub fn geometry_witness(m: &RunManifest) -> Result<(DensityField<f64>, Region<f64>, ConditionWitness<f64>)> {
    let g = m.geometry()?;
    let rho = m.geometry_density()?;
    let sigma = Region::from_density(&rho);
    let sampling = m.sampling()?;
    let mut witness = check_condition1(&g.s, &g.w1, &g.w2, &sigma, &sampling);
    if witness.passed() {
        let (y2, x2) = construct_y2_x2(&witness, &g.s, &g.w2, &sigma, &sampling)?;
        witness.y2 = Some(y2);
        witness.x2_region = Some(x2);
    }
    Ok((rho, sigma, witness))
}

fn check_geometry(m: &RunManifest, out: &Path) -> Result<Outcome> {
    let (_, _, witness) = geometry_witness(m)?;
    let path = out.join("witness.json");
    fs::write(&path, witness.report() + "\n")?;
    let summary = match witness.failed_clause {
        None => format!("condition holds; z1 = {:?}, z2 = {:?}", witness.z1.as_deref().unwrap_or(&[]), witness.z2.as_deref().unwrap_or(&[])),
        Some(c) => format!("condition fails: {c:?}"),
    };
    Ok(Outcome { artifacts: vec![path], success: witness.passed(), summary })
}

#[derive(Serialize)]
struct ExtractionReport<'a> {
    method: ExtractionMethod,
    planned: usize,
    extracted: usize,
    rejected: &'a [(usize, String)],
    plan_warnings: &'a [String],
    plan_rejected: &'a [String],
    angular_gap: f64,
}

pub fn extract_data(m: &RunManifest, method: ExtractionMethod) -> Result<(RayPlan<f64>, Extraction<f64>)> {
    let (rho, sigma, witness) = geometry_witness(m)?;
    if !witness.passed() {
        return Err(Error::precondition(format!("extraction needs the geometric condition; it fails on {:?}", witness.failed_clause)));
    }
    let plan = plan_rays(&witness, &sigma, &m.plan_counts()?)?;
    let r = m.rays()?;
    let extraction = match method {
        ExtractionMethod::Symbol => extract_from_symbols(&rho, m.physics.g, &m.probe_symbol()?, r.sigma, &plan.rays),
        ExtractionMethod::Solver => {
            let probe = m.solver_probe()?;
            let rho = DensityField::from_model(&probe.grid, &m.phantom)?;
            extract_from_solver(&rho, m.physics.g, &probe, &plan.rays)
        }
    };
    Ok((plan, extraction))
}

fn extract(m: &RunManifest, out: &Path, o: &Overrides) -> Result<Outcome> {
    let method = o.method.unwrap_or(m.rays()?.method);
    let (plan, ex) = extract_data(m, method)?;
    let mut artifacts = vec![write_json(&out.join("plan.json"), &plan)?];
    let path = out.join("rays.csv");
    write_ray_data(&ex.data, BufWriter::new(fs::File::create(&path)?))?;
    artifacts.push(path);
    let report = ExtractionReport {
        method,
        planned: plan.rays.len(),
        extracted: ex.data.len(),
        rejected: &ex.rejected,
        plan_warnings: &plan.warnings,
        plan_rejected: &plan.rejected,
        angular_gap: plan.angular_gap,
    };
    artifacts.push(write_json(&out.join("extraction.json"), &report)?);
    Ok(Outcome {
        artifacts,
        success: true,
        summary: format!("{} of {} planned rays extracted ({} rejected)", ex.data.len(), plan.rays.len(), ex.rejected.len()),
    })
}

#[derive(Serialize)]
struct ReconstructionReport<'a> {
    rays: usize,
    iterations: usize,
    residual: f64,
    data_norm: f64,
    converged: bool,
    diagnostic: &'a Option<String>,
    warnings: &'a [String],
    /// Relative l2 error against the phantom at the cell centres.
    relative_error: f64,
}

fn reconstruct_cmd(m: &RunManifest, out: &Path, o: &Overrides) -> Result<Outcome> {
    let rays = out.join("rays.csv");
    if !rays.exists() {
        return Err(Error::precondition(format!("{} not found; run extract first", rays.display())));
    }
    let data = read_ray_data::<f64, _>(fs::File::open(&rays)?)?;
    let (_, sigma, _) = geometry_witness(m)?;
    let mut grid = m.reconstruction_grid(&sigma)?;
    if let Some(l) = o.lambda_reg {
        grid.lambda_reg = l;
        grid.validate()?;
    }
    let rec = reconstruct(&data, &grid)?;
    let truth: Vec<f64> = (0..grid.len()).map(|i| m.phantom.density(&grid.center(i))).collect();
    let den: f64 = truth.iter().map(|v| v * v).sum();
    let num: f64 = rec.values.iter().zip(&truth).map(|(a, b)| (a - b) * (a - b)).sum();
    let relative_error = if den > 0.0 { (num / den).sqrt() } else { num.sqrt() };
    let density = rec.to_density();
    let mut artifacts = Vec::new();
    let path = out.join("reconstruction.json");
    write_density(&density, BufWriter::new(fs::File::create(&path)?))?;
    artifacts.push(path);
    if grid.n == 2 {
        let path = out.join("reconstruction.pgm");
        write_pgm(&density, BufWriter::new(fs::File::create(&path)?))?;
        artifacts.push(path);
    }
    let report = ReconstructionReport {
        rays: data.len(),
        iterations: rec.iterations,
        residual: rec.residual,
        data_norm: rec.data_norm,
        converged: rec.converged,
        diagnostic: &rec.diagnostic,
        warnings: &rec.warnings,
        relative_error,
    };
    artifacts.push(write_json(&out.join("reconstruction_report.json"), &report)?);
    Ok(Outcome {
        artifacts,
        success: true,
        summary: format!("{} iterations, residual {:.3e}, relative error {relative_error:.3}", rec.iterations, rec.residual),
    })
}

fn validate(m: &RunManifest, out: &Path) -> Result<Outcome> {
    let rows: Vec<SuiteRow> = run_suite(m)?;
    let mut table = String::new();
    for r in &rows {
        table.push_str(&format!("{:<4} {:<28} {}\n", if r.pass { "PASS" } else { "FAIL" }, r.name, r.detail));
    }
    let path = out.join("validation.txt");
    fs::write(&path, &table)?;
    let failed = rows.iter().filter(|r| !r.pass).count();
    Ok(Outcome {
        artifacts: vec![path],
        success: failed == 0,
        summary: format!("{table}{} of {} rows pass", rows.len() - failed, rows.len()),
    })
}
