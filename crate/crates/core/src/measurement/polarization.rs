use num_complex::Complex;

use super::{apply_lambda, pairing_m, DetectorSpec, MeasurementKind, MeasurementRecord};
use crate::error::{Error, Result};
use crate::evolution::{evolve_with, DensityField, EvolveOptions, PhysicsParams, SourceSpec};
use crate::scalar::{c, Real};
use crate::spectral::{FieldState, GridSpec};

/// Black-box access to the measurement map `f -> Lambda f`.
pub trait LambdaOracle<T: Real>: Sync {
    fn lambda(&self, source: &SourceSpec<T>) -> Result<MeasurementRecord<T>>;
}

/// `Lambda` realized by the forward solver.
pub struct SolverOracle<'a, T: Real> {
    pub rho: &'a DensityField<T>,
    pub params: PhysicsParams<T>,
    pub grid: GridSpec<T>,
    pub detector: &'a DetectorSpec<T>,
    pub options: EvolveOptions<T>,
}

impl<'a, T: Real> SolverOracle<'a, T> {
    pub fn new(rho: &'a DensityField<T>, params: PhysicsParams<T>, grid: GridSpec<T>, detector: &'a DetectorSpec<T>) -> Self {
        let options = EvolveOptions { extra_radius: detector.support_radius(&grid), ..Default::default() };
        SolverOracle { rho, params, grid, detector, options }
    }

    /// `u` at every detector time.
    pub fn snapshots(&self, source: &SourceSpec<T>) -> Result<Vec<FieldState<T>>> {
        let options = EvolveOptions { snapshot_times: self.detector.times.clone(), ..self.options.clone() };
        Ok(evolve_with(self.rho, &self.params, source, &self.grid, &options, |_, _| Ok(()))?.snapshots)
    }

    /// Direct evaluation of `m(u0^f, u0^h)`; the oracle the polarization
    /// identity is checked against.
    pub fn direct_pairing(&self, f: &SourceSpec<T>, h: &SourceSpec<T>) -> Result<MeasurementRecord<T>> {
        let (uf, uh) = rayon::join(|| self.snapshots(f), || self.snapshots(h));
        let (uf, uh) = (uf?, uh?);
        let values = uf.iter().zip(&uh).map(|(a, b)| pairing_m(a, b, self.detector)).collect::<Result<_>>()?;
        Ok(MeasurementRecord {
            kind: MeasurementKind::Pairing,
            source_id: "direct".into(),
            density_id: String::new(),
            times: self.detector.times.clone(),
            w1_indices: self.detector.w1_indices(&self.grid)?,
            values,
        })
    }
}

impl<T: Real> LambdaOracle<T> for SolverOracle<'_, T> {
    fn lambda(&self, source: &SourceSpec<T>) -> Result<MeasurementRecord<T>> {
        let values = self
            .snapshots(source)?
            .iter()
            .map(|u| apply_lambda(u, self.detector))
            .collect::<Result<Vec<_>>>()?;
        Ok(MeasurementRecord::lambda(
            "solver",
            "",
            self.detector.times.clone(),
            self.detector.w1_indices(&self.grid)?,
            values,
        ))
    }
}

/// `m(u0^f, u0^h) = (Lambda(f+h) - Lambda(f-h) + i Lambda(f+ih) - i Lambda(f-ih)) / 4`
/// using only `Lambda` evaluations.
pub fn polarization_recover<T: Real, O: LambdaOracle<T> + ?Sized>(
    f: &SourceSpec<T>,
    h: &SourceSpec<T>,
    oracle: &O,
) -> Result<MeasurementRecord<T>> {
    let one = Complex::new(T::one(), T::zero());
    let i = Complex::new(T::zero(), T::one());
    let weights = [one, -one, i, -i];
    let sources: Vec<SourceSpec<T>> = weights.iter().map(|w| f.combined(*w, h)).collect();
    let ((a, b), (cc, d)) = rayon::join(
        || rayon::join(|| oracle.lambda(&sources[0]), || oracle.lambda(&sources[1])),
        || rayon::join(|| oracle.lambda(&sources[2]), || oracle.lambda(&sources[3])),
    );
    let records = [a?, b?, cc?, d?];
    let first = &records[0];
    for r in &records {
        if r.kind != MeasurementKind::Lambda || r.times != first.times || r.w1_indices != first.w1_indices {
            return Err(Error::Internal("the four polarization runs disagree on grid or schedule".into()));
        }
        r.validate()?;
    }
    let quarter: T = c(0.25);
    let values = (0..first.times.len())
        .map(|t| {
            (0..first.w1_indices.len())
                .map(|p| {
                    let l: [Complex<T>; 4] = std::array::from_fn(|k| records[k].values[t][p]);
                    (l[0] - l[1] + i * l[2] - i * l[3]) * quarter
                })
                .collect()
        })
        .collect();
    Ok(MeasurementRecord {
        kind: MeasurementKind::Pairing,
        source_id: "polarization".into(),
        density_id: first.density_id.clone(),
        times: first.times.clone(),
        w1_indices: first.w1_indices.clone(),
        values,
    })
}
