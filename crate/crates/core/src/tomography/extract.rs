use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::datum::{Method, RayDatum};
use super::plan::PlannedRay;
use crate::error::{Error, Result};
use crate::evolution::{evolve_with, DensityField, EvolveOptions, PhysicsParams, SourceSpec, TemporalWindow, WavePacket};
use crate::numerics::integrate_partition;
use crate::phantom::{line_breaks, DensityModel};
use crate::scalar::{c, Real};
use crate::spectral::GridSpec;
use crate::transport::{scattered_ratio, ProbeSymbol, RayPair, VConvention};

/// Extracted data plus the rays that were refused, by plan index.
#[derive(Clone, Debug, PartialEq)]
pub struct Extraction<T> {
    pub data: Vec<RayDatum<T>>,
    pub rejected: Vec<(usize, String)>,
}

impl<T> Extraction<T> {
    fn collect(results: Vec<Result<RayDatum<T>>>) -> Self {
        let mut data = Vec::new();
        let mut rejected = Vec::new();
        for (i, r) in results.into_iter().enumerate() {
            match r {
                Ok(d) => data.push(d),
                Err(e) => rejected.push((i, e.to_string())),
            }
        }
        Extraction { data, rejected }
    }
}

/// `int_0^T rho(y + r kappa) dr` by adaptive quadrature.
pub fn line_integral<T: Real, M: DensityModel<T> + ?Sized>(rho: &M, y: &[T], kappa: &[T], length: T) -> Result<T> {
    let f = |r: T| {
        let x: Vec<T> = y.iter().zip(kappa).map(|(a, b)| *a + *b * r).collect();
        rho.density(&x)
    };
    Ok(integrate_partition(f, &line_breaks(rho, &[(y, kappa)], T::zero(), length), c(1e-13), c(1e-12))?.value)
}

/// Synthetic data by direct quadrature of a known density.
pub fn quadrature_data<T: Real, M: DensityModel<T> + ?Sized>(rho: &M, rays: &[(Vec<T>, Vec<T>, T)]) -> Result<Vec<RayDatum<T>>> {
    rays.par_iter()
        .map(|(y, k, len)| {
            Ok(RayDatum {
                vertex: y.clone(),
                direction: k.clone(),
                length: *len,
                value: line_integral(rho, y, k, *len)?,
                method: Method::Quadrature,
                uncertainty: T::zero(),
                low_confidence: false,
            })
        })
        .collect()
}

fn check_reference<T: Real, M: DensityModel<T> + ?Sized>(rho: &M, ray: &PlannedRay<T>, near_vertex: T) -> Result<()> {
    let probe_ray = |y: &[T], k: &[T], len: T| {
        let m = (len * c(50.0)).ceil().to_usize().unwrap_or(1).max(16);
        (0..=m).any(|i| {
            let r = len * T::from_usize_lossy(i) / T::from_usize_lossy(m);
            let x: Vec<T> = y.iter().zip(k).map(|(a, b)| *a + *b * r).collect();
            rho.density(&x) > T::zero()
        })
    };
    if probe_ray(&ray.y1, &ray.kappa1, ray.length) {
        return Err(Error::precondition("reference ray 1 meets the density"));
    }
    if probe_ray(&ray.y2, &ray.kappa2, near_vertex) {
        return Err(Error::precondition("density is nonzero next to the ray 2 vertex"));
    }
    Ok(())
}

/// Line integrals from the transport-symbol ratio,
/// `I = -sigma_2 ratio / g^2`, one ray pair at a time.
pub fn extract_from_symbols<T: Real, M: DensityModel<T> + ?Sized>(
    rho: &M,
    g: T,
    probe: &ProbeSymbol<T>,
    sigma: T,
    rays: &[PlannedRay<T>],
) -> Extraction<T> {
    let v = VConvention::default();
    let results = rays
        .par_iter()
        .map(|r| {
            check_reference(rho, r, probe.eps * c(2.0))?;
            let pair = RayPair::new(r.y1.clone(), r.y2.clone(), r.kappa1.clone(), r.kappa2.clone(), sigma, sigma, r.length);
            let ratio = scattered_ratio(rho, g, probe, &pair, &v)?;
            Ok(RayDatum {
                vertex: r.y2.clone(),
                direction: r.kappa2.clone(),
                length: r.length,
                value: -sigma * ratio.re / (g * g),
                method: Method::SymbolOracle,
                uncertainty: (sigma * ratio.im / (g * g)).abs(),
                low_confidence: false,
            })
        })
        .collect();
    Extraction::collect(results)
}

/// Wave-packet probe settings for the solver path.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverProbe<T> {
    pub grid: GridSpec<T>,
    /// Carrier wavenumber `|k|` of both photon packets.
    pub carrier: T,
    pub width: T,
    /// Source time window `(start, end)`.
    pub window: (T, T),
    /// Peak search half-window, in packet widths.
    pub search_widths: T,
    /// Largest `|u_sc / u_in|` at the peak for a trusted estimate.
    pub born_gate: T,
    /// Smallest ratio between the peak of `|u_in|` and its value at the
    /// edges of the search window.
    pub min_contrast: T,
}

impl<T: Real> SolverProbe<T> {
    pub fn new(grid: GridSpec<T>, carrier: T, width: T) -> Self {
        SolverProbe { grid, carrier, width, window: (c(0.05), c(0.45)), search_widths: c(1.5), born_gate: c(0.1), min_contrast: c(2.0) }
    }

    fn source(&self, ray: &PlannedRay<T>) -> SourceSpec<T> {
        let k1 = ray.kappa1.iter().map(|x| *x * self.carrier).collect();
        let k2 = ray.kappa2.iter().map(|x| *x * self.carrier).collect();
        SourceSpec::single(WavePacket {
            center1: ray.y1.clone(),
            center2: ray.y2.clone(),
            width: self.width,
            carrier1: k1,
            carrier2: k2,
            amplitude: [T::one(), T::zero()],
            window: TemporalWindow { start: self.window.0, end: self.window.1, carrier: self.carrier * c(2.0) },
        })
    }

    /// Expected arrival time of the packet at the ray ends.
    pub fn arrival(&self, ray: &PlannedRay<T>) -> T {
        (self.window.0 + self.window.1) * c(0.5) + ray.length
    }

    fn span(&self, ray: &PlannedRay<T>) -> (T, T) {
        let t = self.arrival(ray);
        let half = self.width * self.search_widths;
        (t - half, t + half)
    }

    /// `u_0` at the grid node nearest to the two ray ends, for every step
    /// inside the search window.
    pub fn trace(&self, rho: &DensityField<T>, g: T, ray: &PlannedRay<T>) -> Result<Vec<(T, Complex<T>)>> {
        let grid = &self.grid;
        let (lo, hi) = self.span(ray);
        if hi > grid.t_max {
            return Err(Error::config(format!("t_max = {} ends before the search window closes at {hi}", grid.t_max)));
        }
        let i1 = grid.nearest_block_index(&ray.end1()).ok_or_else(|| Error::precondition("ray 1 ends outside the grid"))?;
        let i2 = grid.nearest_block_index(&ray.end2()).ok_or_else(|| Error::precondition("ray 2 ends outside the grid"))?;
        let options = EvolveOptions { observe_window: Some((lo - grid.dt, hi + grid.dt)), ..Default::default() };
        let params = PhysicsParams::new(g, T::zero())?;
        let mut out = Vec::new();
        evolve_with(rho, &params, &self.source(ray), grid, &options, |s, _| {
            if s.time >= lo && s.time <= hi {
                out.push((s.time, s.at(0, i1, i2)));
            }
            Ok(())
        })?;
        Ok(out)
    }
}

/// Ratio `u_sc / u_in` at the envelope peak of `u_in` and the peak time.
/// The peak is located by a parabola through the three samples around the
/// largest `|u_in|`; the ratio is interpolated with the same weights.
pub fn peak_ratio<T: Real>(incident: &[(T, Complex<T>)], full: &[(T, Complex<T>)], min_contrast: T) -> Result<(T, Complex<T>, bool)> {
    if incident.len() < 3 || incident.len() != full.len() {
        return Err(Error::Extraction("too few samples in the search window".into()));
    }
    let mags: Vec<T> = incident.iter().map(|s| s.1.norm()).collect();
    let j = (0..mags.len()).fold(0, |b, i| if mags[i] > mags[b] { i } else { b });
    if j == 0 || j + 1 == mags.len() {
        return Err(Error::Extraction("incident envelope peak not found inside the search window".into()));
    }
    let (m0, m1, m2) = (mags[j - 1], mags[j], mags[j + 1]);
    let denom = m0 - m1 * c(2.0) + m2;
    let x = if denom < T::zero() { ((m0 - m2) * c(0.5) / denom).max(-T::one()).min(T::one()) } else { T::zero() };
    let w = [x * (x - T::one()) * c(0.5), T::one() - x * x, x * (x + T::one()) * c(0.5)];
    let ratio: Complex<T> =
        (0..3).map(|a| (full[j - 1 + a].1 - incident[j - 1 + a].1) / incident[j - 1 + a].1 * w[a]).sum();
    let dt = incident[j].0 - incident[j - 1].0;
    let edge = mags[0].max(mags[mags.len() - 1]);
    let contrast_ok = m1 >= edge * min_contrast;
    Ok((incident[j].0 + x * dt, ratio, contrast_ok))
}

/// Line integral from one pair of solver traces. The solver ratio carries
/// a phase `-i` relative to the symbol ratio, so
/// `I = Re(i sigma ratio / g^2)` and the imaginary part is the uncertainty.
pub fn datum_from_traces<T: Real>(
    probe: &SolverProbe<T>,
    g: T,
    ray: &PlannedRay<T>,
    incident: &[(T, Complex<T>)],
    full: &[(T, Complex<T>)],
) -> Result<RayDatum<T>> {
    let (_, ratio, contrast_ok) = peak_ratio(incident, full, probe.min_contrast)?;
    let est = Complex::new(T::zero(), T::one()) * ratio * probe.carrier / (g * g);
    Ok(RayDatum {
        vertex: ray.y2.clone(),
        direction: ray.kappa2.clone(),
        length: ray.length,
        value: est.re,
        method: Method::WavePacket,
        uncertainty: est.im.abs(),
        low_confidence: !contrast_ok || ratio.norm() >= probe.born_gate,
    })
}

/// Solver path: for each ray the solver runs once with `rho` and once with
/// `rho = 0` (the incident field), and the ratio at the incident peak gives
/// the line integral.
pub fn extract_from_solver<T: Real>(rho: &DensityField<T>, g: T, probe: &SolverProbe<T>, rays: &[PlannedRay<T>]) -> Extraction<T> {
    let zero = DensityField::zeros(&probe.grid);
    let results = rays
        .iter()
        .map(|r| {
            check_reference(rho, r, T::zero())?;
            let incident = probe.trace(&zero, g, r)?;
            let full = probe.trace(rho, g, r)?;
            datum_from_traces(probe, g, r, &incident, &full)
        })
        .collect();
    Extraction::collect(results)
}
