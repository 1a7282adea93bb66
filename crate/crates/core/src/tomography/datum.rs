use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{c, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// Transport-symbol oracle.
    SymbolOracle,
    /// Full solver with wave packets.
    WavePacket,
    /// Direct quadrature of a known density (synthetic data).
    Quadrature,
}

/// Estimate of `int_0^T rho(vertex + r direction) dr`.
#[derive(Clone, Debug, PartialEq)]
pub struct RayDatum<T> {
    pub vertex: Vec<T>,
    pub direction: Vec<T>,
    pub length: T,
    pub value: T,
    pub method: Method,
    pub uncertainty: T,
    /// Set when the estimate is usable but suspect.
    pub low_confidence: bool,
}

impl<T: Real> RayDatum<T> {
    pub fn end(&self) -> Vec<T> {
        self.vertex.iter().zip(&self.direction).map(|(y, k)| *y + *k * self.length).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.value.is_finite() || !(self.length > T::zero()) || self.vertex.len() != self.direction.len() {
            return Err(Error::validation(format!(
                "ray datum needs finite value, positive length and matching dimensions (value {}, length {})",
                self.value, self.length
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct Row {
    vertex: String,
    direction: String,
    length: f64,
    value: f64,
    method: Method,
    uncertainty: f64,
    low_confidence: bool,
}

fn join<T: Real>(v: &[T]) -> String {
    v.iter().map(|x| format!("{:e}", x.to_f64_lossy())).collect::<Vec<_>>().join(" ")
}

fn split<T: Real>(s: &str) -> Result<Vec<T>> {
    s.split_whitespace()
        .map(|p| p.parse::<f64>().map(c).map_err(|e| Error::Format(format!("{p:?}: {e}"))))
        .collect()
}

/// CSV with columns `vertex,direction,length,value,method,uncertainty,low_confidence`;
/// vectors are space separated.
pub fn write_ray_data<T: Real, W: Write>(data: &[RayDatum<T>], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for d in data {
        out.serialize(Row {
            vertex: join(&d.vertex),
            direction: join(&d.direction),
            length: d.length.to_f64_lossy(),
            value: d.value.to_f64_lossy(),
            method: d.method,
            uncertainty: d.uncertainty.to_f64_lossy(),
            low_confidence: d.low_confidence,
        })
        .map_err(|e| Error::Format(e.to_string()))?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_ray_data<T: Real, R: Read>(r: R) -> Result<Vec<RayDatum<T>>> {
    let mut out = Vec::new();
    for row in csv::Reader::from_reader(r).deserialize::<Row>() {
        let row = row.map_err(|e| Error::Format(e.to_string()))?;
        let d = RayDatum {
            vertex: split(&row.vertex)?,
            direction: split(&row.direction)?,
            length: c(row.length),
            value: c(row.value),
            method: row.method,
            uncertainty: c(row.uncertainty),
            low_confidence: row.low_confidence,
        };
        d.validate()?;
        out.push(d);
    }
    Ok(out)
}
