use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::coupling::{CouplingExp, CouplingOperator};
use super::source::PreparedSource;
use super::{DensityField, PhysicsParams, SourceSpec};
use crate::error::{Error, Result};
use crate::scalar::{c, Real};
use crate::spectral::{read_snapshot, write_snapshot, FieldState, FreeFlow, GridSpec, MultiplierPlan, Sponge};

/// Knobs for [`evolve_with`].
#[derive(Clone, Debug)]
pub struct EvolveOptions<T> {
    /// Times at which to keep a copy of the state; each is matched to the
    /// nearest step.
    pub snapshot_times: Vec<T>,
    /// Reject grids that violate the no-wrap rule.  Periodic test
    /// configurations switch it off.
    pub enforce_no_wrap: bool,
    /// Extra radius (detectors, probes) counted by the no-wrap rule.
    pub extra_radius: T,
    /// Optional `(width, strength)` sponge.
    pub sponge: Option<(T, T)>,
    /// When set, the observer only sees steps whose time lies in
    /// `[start, end]` and the cheaper fused stepping is kept elsewhere.
    pub observe_window: Option<(T, T)>,
}

impl<T: Real> Default for EvolveOptions<T> {
    fn default() -> Self {
        EvolveOptions {
            snapshot_times: Vec::new(),
            enforce_no_wrap: true,
            extra_radius: T::zero(),
            sponge: None,
            observe_window: None,
        }
    }
}

impl<T: Real> EvolveOptions<T> {
    pub fn at(times: Vec<T>) -> Self {
        EvolveOptions { snapshot_times: times, ..Default::default() }
    }
}

/// One Strang step of `i du/dt = (L + B) u + f`.
pub struct Stepper<T: Real> {
    plan: Arc<MultiplierPlan<T>>,
    half_flow: FreeFlow<T>,
    full_flow: FreeFlow<T>,
    half_coupling: CouplingExp<T>,
    full_coupling: CouplingExp<T>,
    source: PreparedSource<T>,
    sponge: Option<Sponge<T>>,
    dt: T,
    steps: usize,
}

impl<T: Real> Stepper<T> {
    pub fn new(
        plan: Arc<MultiplierPlan<T>>,
        coupling: &CouplingOperator<T>,
        source: &SourceSpec<T>,
        dt: T,
    ) -> Result<Self> {
        let grid = plan.grid().clone();
        if coupling.block_len() != grid.block_len() {
            return Err(Error::config("density grid does not match the field grid"));
        }
        let half = dt * c(0.5);
        Ok(Stepper {
            half_flow: plan.free_flow(half),
            full_flow: plan.free_flow(dt),
            half_coupling: coupling.exponential(half),
            full_coupling: coupling.exponential(dt),
            source: PreparedSource::new(&grid, source)?,
            sponge: None,
            plan,
            dt,
            steps: 0,
        })
    }

    pub fn with_sponge(mut self, width: T, strength: T) -> Self {
        self.sponge = Some(Sponge::new(self.plan.grid(), width, strength));
        self
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    /// Advance `state` by `dt` in place.
    pub fn step(&mut self, state: &mut FieldState<T>) -> Result<()> {
        self.advance(state, false, true)
    }

    /// One step in which the leading half flow is replaced by a full flow
    /// when `lead_full` (the previous step left its trailing half flow
    /// pending) and the trailing half flow is skipped unless `trail`.
    fn advance(&mut self, state: &mut FieldState<T>, lead_full: bool, trail: bool) -> Result<()> {
        if !(state.time >= T::zero()) {
            return Err(Error::precondition(format!("state time {} must be >= 0", state.time)));
        }
        if lead_full {
            self.plan.apply_free_flow(&self.full_flow, state);
            state.time -= self.half_flow.dt;
        } else {
            self.plan.apply_free_flow(&self.half_flow, state);
        }
        let mid = state.time;
        if self.source.is_active(mid) {
            self.half_coupling.apply(state)?;
            let m = state.grid.len();
            self.source.inject(mid, Complex::new(T::zero(), -self.dt), &mut state.data[..m]);
            self.half_coupling.apply(state)?;
        } else {
            self.full_coupling.apply(state)?;
        }
        if trail {
            self.plan.apply_free_flow(&self.half_flow, state);
            if let Some(s) = &self.sponge {
                s.apply(state);
            }
        } else {
            state.time += self.half_flow.dt;
        }
        self.steps += 1;
        if !state.is_finite() {
            return Err(Error::NumericalBlowup {
                step: self.steps,
                detail: format!("non-finite amplitude at t = {}", state.time),
            });
        }
        Ok(())
    }

    /// Apply a pending trailing half flow (see [`Stepper::advance`]).
    fn settle(&self, state: &mut FieldState<T>) {
        self.plan.apply_free_flow(&self.half_flow, state);
        state.time -= self.half_flow.dt;
    }
}

/// Snapshots of one run.
#[derive(Clone, Debug)]
pub struct Trajectory<T: Real> {
    pub snapshots: Vec<FieldState<T>>,
    pub steps: usize,
    /// Largest l2 norm seen over all steps.
    pub max_norm: T,
}

#[derive(Serialize, Deserialize)]
struct TrajectoryIndex {
    n: usize,
    points_per_axis: usize,
    box_halfwidth: f64,
    dt: f64,
    t_max: f64,
    steps: usize,
    files: Vec<(f64, String)>,
}

impl<T: Real> Trajectory<T> {
    /// Write `snap_XXXX.tpf` files plus `index.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        let mut paths = Vec::new();
        for (i, s) in self.snapshots.iter().enumerate() {
            let name = format!("snap_{i:04}.tpf");
            let path = dir.join(&name);
            write_snapshot(BufWriter::new(fs::File::create(&path)?), s)?;
            files.push((s.time.to_f64_lossy(), name));
            paths.push(path);
        }
        let grid = self.snapshots.first().map(|s| s.grid.clone());
        let index = TrajectoryIndex {
            n: grid.as_ref().map_or(0, |g| g.n),
            points_per_axis: grid.as_ref().map_or(0, |g| g.points_per_axis),
            box_halfwidth: grid.as_ref().map_or(0.0, |g| g.box_halfwidth.to_f64_lossy()),
            dt: grid.as_ref().map_or(0.0, |g| g.dt.to_f64_lossy()),
            t_max: grid.as_ref().map_or(0.0, |g| g.t_max.to_f64_lossy()),
            steps: self.steps,
            files,
        };
        let path = dir.join("index.json");
        fs::write(&path, serde_json::to_string_pretty(&index).map_err(|e| Error::Format(e.to_string()))?)?;
        paths.push(path);
        Ok(paths)
    }

    /// Load a trajectory written by [`Trajectory::write`].  The payload is
    /// stored in single precision.
    pub fn read(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join("index.json"))?;
        let index: TrajectoryIndex = serde_json::from_str(&text).map_err(|e| Error::Format(e.to_string()))?;
        let mut snapshots = Vec::new();
        for (_, name) in &index.files {
            let (header, data) = read_snapshot(BufReader::new(fs::File::open(dir.join(name))?))?;
            snapshots.push(FieldState::from_snapshot(&header, data, c(index.dt), c(index.t_max))?);
        }
        let max_norm = snapshots.iter().map(|s| s.norm()).fold(T::zero(), T::max);
        Ok(Trajectory { snapshots, steps: index.steps, max_norm })
    }
}

/// Solve from `u = 0` at `t = 0` to `grid.t_max`, keeping the requested
/// snapshots.
pub fn evolve<T: Real>(
    rho: &DensityField<T>,
    params: &PhysicsParams<T>,
    source: &SourceSpec<T>,
    grid: &GridSpec<T>,
    snapshot_times: &[T],
) -> Result<Trajectory<T>> {
    let options = EvolveOptions::at(snapshot_times.to_vec());
    let mut stepper = prepare(rho, params, source, grid, &options)?;
    run::<T, fn(&FieldState<T>, usize) -> Result<()>>(&mut stepper, grid, &options, None)
}

/// [`evolve`] with options and an observer called after every step.
pub fn evolve_with<T: Real, F>(
    rho: &DensityField<T>,
    params: &PhysicsParams<T>,
    source: &SourceSpec<T>,
    grid: &GridSpec<T>,
    options: &EvolveOptions<T>,
    mut observer: F,
) -> Result<Trajectory<T>>
where
    F: FnMut(&FieldState<T>, usize) -> Result<()>,
{
    let mut stepper = prepare(rho, params, source, grid, options)?;
    run(&mut stepper, grid, options, Some(&mut observer))
}

/// Validate a run and build its stepper.
fn prepare<T: Real>(
    rho: &DensityField<T>,
    params: &PhysicsParams<T>,
    source: &SourceSpec<T>,
    grid: &GridSpec<T>,
    options: &EvolveOptions<T>,
) -> Result<Stepper<T>> {
    grid.validate()?;
    params.validate()?;
    source.validate(grid.n)?;
    if let Some((s, e)) = source.window() {
        if !(s > T::zero() && e < grid.t_max) {
            return Err(Error::config(format!(
                "source window ({s}, {e}) must lie inside (0, t_max = {})",
                grid.t_max
            )));
        }
    }
    if rho.n != grid.n || rho.points_per_axis != grid.points_per_axis {
        return Err(Error::config("density grid does not match the field grid"));
    }
    if options.enforce_no_wrap {
        let r = rho.support_radius().max(source.support_radius()).max(options.extra_radius);
        grid.check_no_wrap(r)?;
    }
    let plan = Arc::new(MultiplierPlan::new(grid)?);
    let coupling = CouplingOperator::assemble(rho, params)?;
    let mut stepper = Stepper::new(plan, &coupling, source, grid.dt)?;
    if let Some((w, s)) = options.sponge {
        stepper = stepper.with_sponge(w, s);
    }
    Ok(stepper)
}

/// Without an observer (and without a sponge) consecutive half flows are
/// merged and the state is only completed when a snapshot is due.
fn run<T: Real, F>(
    stepper: &mut Stepper<T>,
    grid: &GridSpec<T>,
    options: &EvolveOptions<T>,
    mut observer: Option<&mut F>,
) -> Result<Trajectory<T>>
where
    F: FnMut(&FieldState<T>, usize) -> Result<()>,
{
    let steps = grid.step_count();
    let dt = grid.dt;
    let has_observer = observer.is_some();
    let observing = |k: usize| match (has_observer, options.observe_window) {
        (false, _) => false,
        (true, None) => true,
        (true, Some((a, b))) => {
            let t = dt * T::from_usize_lossy(k);
            t >= a && t <= b
        }
    };
    let can_fuse = stepper.sponge.is_none();
    let mut targets: Vec<(usize, usize)> = options
        .snapshot_times
        .iter()
        .enumerate()
        .map(|(i, t)| ((*t / dt).round().to_usize().unwrap_or(0).min(steps), i))
        .collect();
    targets.sort();
    let mut snapshots: Vec<Option<FieldState<T>>> = vec![None; options.snapshot_times.len()];
    let mut state = FieldState::zeros(grid);
    let mut next = 0;
    let mut max_norm = T::zero();
    let mut pending = false;
    let mut active = false;
    for k in 0..=steps {
        if k > 0 {
            // before the source has acted the state is exactly zero
            if !active && !stepper.source.is_active(state.time + dt * c(0.5)) {
                stepper.steps += 1;
            } else {
                active = true;
                let fuse = can_fuse && !observing(k);
                stepper.advance(&mut state, pending, !fuse)?;
                pending = fuse;
            }
            state.time = dt * T::from_usize_lossy(k);
            max_norm = max_norm.max(state.norm());
        }
        let due = next < targets.len() && targets[next].0 == k;
        let watch = observing(k);
        if watch || due {
            let view = if pending {
                let mut s = state.clone();
                stepper.settle(&mut s);
                s.time = state.time;
                Some(s)
            } else {
                None
            };
            let current = view.as_ref().unwrap_or(&state);
            if k > 0 && watch {
                if let Some(obs) = observer.as_mut() {
                    obs(current, k)?;
                }
            }
            while next < targets.len() && targets[next].0 == k {
                snapshots[targets[next].1] = Some(current.clone());
                next += 1;
            }
        }
    }
    Ok(Trajectory { snapshots: snapshots.into_iter().map(|s| s.expect("every target step reached")).collect(), steps, max_norm })
}
