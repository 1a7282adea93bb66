use std::io::{BufRead, Read, Write};

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementKind {
    Lambda,
    Pairing,
}

impl MeasurementKind {
    fn name(self) -> &'static str {
        match self {
            MeasurementKind::Lambda => "lambda",
            MeasurementKind::Pairing => "pairing",
        }
    }
}

/// Detector output indexed by `(time sample, W1 point)`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeasurementRecord<T> {
    pub kind: MeasurementKind,
    pub source_id: String,
    pub density_id: String,
    pub times: Vec<T>,
    /// Grid index of each `W1` point.
    pub w1_indices: Vec<usize>,
    /// `values[time][point]`; imaginary parts are zero for `Lambda`.
    pub values: Vec<Vec<Complex<T>>>,
}

#[derive(Serialize, Deserialize)]
struct Row {
    time: f64,
    x1_index: usize,
    re: f64,
    im: f64,
}

impl<T: Real> MeasurementRecord<T> {
    pub fn lambda(source_id: &str, density_id: &str, times: Vec<T>, w1_indices: Vec<usize>, values: Vec<Vec<T>>) -> Self {
        MeasurementRecord {
            kind: MeasurementKind::Lambda,
            source_id: source_id.into(),
            density_id: density_id.into(),
            times,
            w1_indices,
            values: values.into_iter().map(|r| r.into_iter().map(|v| Complex::new(v, T::zero())).collect()).collect(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.len() != self.times.len() || self.values.iter().any(|r| r.len() != self.w1_indices.len()) {
            return Err(Error::Format("record shape does not match times x points".into()));
        }
        for z in self.values.iter().flatten() {
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::validation("measurement values must be finite"));
            }
            if self.kind == MeasurementKind::Lambda && (z.im != T::zero() || z.re < T::zero()) {
                return Err(Error::validation("lambda values must be real and nonnegative"));
            }
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.values
            .iter()
            .flatten()
            .zip(other.values.iter().flatten())
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().flatten().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    /// CSV with `# key=value` header lines followed by `time,x1_index,re,im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# kind={}", self.kind.name())?;
        writeln!(w, "# source_id={}", self.source_id)?;
        writeln!(w, "# density_id={}", self.density_id)?;
        let mut out = csv::Writer::from_writer(w);
        for (t, row) in self.times.iter().zip(&self.values) {
            for (i, z) in self.w1_indices.iter().zip(row) {
                out.serialize(Row { time: t.to_f64_lossy(), x1_index: *i, re: z.re.to_f64_lossy(), im: z.im.to_f64_lossy() })
                    .map_err(|e| Error::Format(e.to_string()))?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut reader = std::io::BufReader::new(r);
        let mut meta = std::collections::HashMap::new();
        let mut body = String::new();
        let mut line = String::new();
        while reader.read_line(&mut line)? > 0 {
            if let Some(rest) = line.strip_prefix("# ") {
                if let Some((k, v)) = rest.trim_end().split_once('=') {
                    meta.insert(k.to_string(), v.to_string());
                }
            } else {
                body.push_str(&line);
            }
            line.clear();
        }
        let kind = match meta.get("kind").map(String::as_str) {
            Some("lambda") => MeasurementKind::Lambda,
            Some("pairing") => MeasurementKind::Pairing,
            other => return Err(Error::Format(format!("unknown measurement kind {other:?}"))),
        };
        let mut times: Vec<T> = Vec::new();
        let mut w1_indices = Vec::new();
        let mut values: Vec<Vec<Complex<T>>> = Vec::new();
        for row in csv::Reader::from_reader(body.as_bytes()).deserialize::<Row>() {
            let row = row.map_err(|e| Error::Format(e.to_string()))?;
            let t: T = c(row.time);
            if times.last() != Some(&t) {
                times.push(t);
                values.push(Vec::new());
            }
            if times.len() == 1 {
                w1_indices.push(row.x1_index);
            }
            values.last_mut().expect("row pushed").push(Complex::new(c(row.re), c(row.im)));
        }
        let rec = MeasurementRecord {
            kind,
            source_id: meta.remove("source_id").unwrap_or_default(),
            density_id: meta.remove("density_id").unwrap_or_default(),
            times,
            w1_indices,
            values,
        };
        rec.validate()?;
        Ok(rec)
    }
}
