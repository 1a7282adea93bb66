use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolution::{DensityField, PhysicsParams, SourceSpec, WavePacket};
use crate::geometry::{Clause, Region, Sampling};
use crate::measurement::DetectorSpec;
use crate::phantom::Phantom;
use crate::spectral::GridSpec;
use crate::tomography::{PlanCounts, ReconstructionGrid, SolverProbe};
use crate::transport::ProbeSymbol;

/// One file driving every pipeline stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    #[serde(default)]
    pub seed: u64,
    pub grid: GridSpec<f64>,
    pub physics: PhysicsParams<f64>,
    pub phantom: Phantom<f64>,
    #[serde(default)]
    pub sources: Vec<WavePacket<f64>>,
    #[serde(default)]
    pub output: OutputSpec,
    pub detector: Option<DetectorManifest>,
    pub geometry: Option<GeometryManifest>,
    pub rays: Option<RayManifest>,
    pub solver_probe: Option<SolverProbeManifest>,
    pub reconstruction: Option<ReconstructionManifest>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub directory: Option<String>,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorManifest {
    pub w1_points: Vec<Vec<f64>>,
    /// `chi` is the indicator of this region on the `x2` block.
    pub chi: Region<f64>,
    pub times: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryManifest {
    /// Grid on which the phantom is sampled to obtain `Sigma`.
    pub density_points: usize,
    pub density_halfwidth: f64,
    pub sampling_step: f64,
    pub s: Region<f64>,
    pub w1: Region<f64>,
    pub w2: Region<f64>,
    /// Expected outcome, checked by `validate`: `None` means pass.
    pub expect_failure: Option<Clause>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExtractionMethod {
    Symbol,
    Solver,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RayManifest {
    pub vertices: usize,
    pub targets_per_vertex: usize,
    pub max_angular_gap: f64,
    /// Radial frequency of both photons.
    pub sigma: f64,
    pub eps: f64,
    pub concentration: f64,
    pub method: ExtractionMethod,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverProbeManifest {
    pub grid: GridSpec<f64>,
    pub carrier: f64,
    pub width: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReconstructionManifest {
    pub points_per_axis: usize,
    pub box_halfwidth: f64,
    pub lambda_reg: f64,
    pub max_iterations: usize,
    /// Restrict the unknowns to the bounding box of `Sigma` grown by this
    /// margin; negative disables the restriction.
    pub support_pad: f64,
}

fn missing(section: &str) -> Error {
    Error::config(format!("manifest has no [{section}] section"))
}

impl RunManifest {
    pub fn from_toml(text: &str) -> Result<Self> {
        let m: RunManifest = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_toml(&std::fs::read_to_string(path)?)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn source(&self) -> SourceSpec<f64> {
        SourceSpec { packets: self.sources.clone() }
    }

    /// The phantom sampled on the solver grid.
    pub fn density(&self) -> Result<DensityField<f64>> {
        DensityField::from_model(&self.grid, &self.phantom)
    }

    /// The phantom sampled on the geometry grid (defines `Sigma`).
    pub fn geometry_density(&self) -> Result<DensityField<f64>> {
        let g = self.geometry()?;
        let grid = GridSpec::new(self.grid.n, g.density_points, g.density_halfwidth, self.grid.dt, self.grid.t_max)?;
        DensityField::from_model(&grid, &self.phantom)
    }

    pub fn geometry(&self) -> Result<&GeometryManifest> {
        self.geometry.as_ref().ok_or_else(|| missing("geometry"))
    }

    pub fn rays(&self) -> Result<&RayManifest> {
        self.rays.as_ref().ok_or_else(|| missing("rays"))
    }

    pub fn sampling(&self) -> Result<Sampling<f64>> {
        Ok(Sampling::new(self.geometry()?.sampling_step))
    }

    pub fn detector_spec(&self) -> Result<DetectorSpec<f64>> {
        let d = self.detector.as_ref().ok_or_else(|| missing("detector"))?;
        let chi = &d.chi;
        DetectorSpec::with_weight(&self.grid, d.w1_points.clone(), |x| if chi.contains(x) { 1.0 } else { 0.0 }, d.times.clone())
    }

    pub fn plan_counts(&self) -> Result<PlanCounts<f64>> {
        let r = self.rays()?;
        Ok(PlanCounts { vertices: r.vertices, targets_per_vertex: r.targets_per_vertex, max_angular_gap: r.max_angular_gap })
    }

    pub fn probe_symbol(&self) -> Result<ProbeSymbol<f64>> {
        let r = self.rays()?;
        let mut center = vec![0.0; self.grid.n];
        center[0] = 1.0;
        ProbeSymbol::new(r.eps, r.concentration, center)
    }

    pub fn solver_probe(&self) -> Result<SolverProbe<f64>> {
        let p = self.solver_probe.as_ref().ok_or_else(|| missing("solver_probe"))?;
        Ok(SolverProbe::new(p.grid.clone(), p.carrier, p.width))
    }

    /// Reconstruction grid, restricted to the padded bounding box of `sigma`
    /// when requested.
    pub fn reconstruction_grid(&self, sigma: &Region<f64>) -> Result<ReconstructionGrid<f64>> {
        let r = self.reconstruction.as_ref().ok_or_else(|| missing("reconstruction"))?;
        let mut grid = ReconstructionGrid::new(self.grid.n, r.points_per_axis, r.box_halfwidth, r.lambda_reg);
        grid.max_iterations = r.max_iterations;
        if r.support_pad >= 0.0 {
            if let Some((lo, hi)) = sigma.bounds() {
                grid.support_box =
                    Some((lo.iter().map(|x| x - r.support_pad).collect(), hi.iter().map(|x| x + r.support_pad).collect()));
            }
        }
        grid.validate()?;
        Ok(grid)
    }

    /// Cross-field checks, reporting the first offending field.
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, e: Error| Error::config(format!("{name}: {e}"));
        self.grid.validate().map_err(|e| field("grid", e))?;
        self.physics.validate().map_err(|e| field("physics", e))?;
        self.source().validate(self.grid.n).map_err(|e| field("sources", e))?;
        let n = self.grid.n;
        let radius = match &self.phantom {
            Phantom::Zero => 0.0,
            p => {
                for (center, r) in crate::phantom::DensityModel::support_balls(p).unwrap_or_default() {
                    if center.len() != n || !(r > 0.0) {
                        return Err(Error::config(format!("phantom: support ball {center:?} radius {r} does not fit n = {n}")));
                    }
                }
                p.support_radius()
            }
        };
        let mut reach = radius.max(self.source().support_radius());
        if let Some(d) = &self.detector {
            if d.w1_points.iter().any(|p| p.len() != n) || d.chi.dim() != n {
                return Err(Error::config("detector: points and chi must have dimension n"));
            }
            reach = reach.max(self.detector_spec().map_err(|e| field("detector", e))?.support_radius(&self.grid));
        }
        self.grid.check_no_wrap(reach).map_err(|e| field("grid.t_max", e))?;
        if let Some(t) = self.output.snapshot_times.iter().find(|t| !(**t >= 0.0 && **t <= self.grid.t_max)) {
            return Err(Error::config(format!("output.snapshot_times: {t} outside [0, t_max]")));
        }
        if let Some(g) = &self.geometry {
            for (name, r) in [("geometry.w1", &g.w1), ("geometry.w2", &g.w2)] {
                r.validate().map_err(|e| field(name, e))?;
                if r.dim() != n {
                    return Err(Error::config(format!("{name}: dimension {} differs from n = {n}", r.dim())));
                }
            }
            g.s.validate().map_err(|e| field("geometry.s", e))?;
            if g.s.dim() != 2 * n {
                return Err(Error::config(format!("geometry.s: dimension {} differs from 2n = {}", g.s.dim(), 2 * n)));
            }
            Sampling::new(g.sampling_step).validate().map_err(|e| field("geometry.sampling_step", e))?;
            GridSpec::new(n, g.density_points, g.density_halfwidth, self.grid.dt, self.grid.t_max)
                .map_err(|e| field("geometry.density_points", e))?;
        }
        if self.rays.is_some() {
            self.probe_symbol().map_err(|e| field("rays", e))?;
            let r = self.rays()?;
            if !(r.sigma > r.eps) {
                return Err(Error::config("rays.sigma: must exceed rays.eps"));
            }
        }
        if let Some(p) = &self.solver_probe {
            p.grid.validate().map_err(|e| field("solver_probe.grid", e))?;
            if !(p.carrier > 0.0 && p.width > 0.0) {
                return Err(Error::config("solver_probe: carrier and width must be positive"));
            }
        }
        if let Some(r) = &self.reconstruction {
            ReconstructionGrid::new(n, r.points_per_axis, r.box_halfwidth, r.lambda_reg)
                .validate()
                .map_err(|e| field("reconstruction", e))?;
        }
        Ok(())
    }
}
