//! Binary field snapshots.
//!
//! Layout (all little-endian):
//!
//! | offset | type   | field                         |
//! |--------|--------|-------------------------------|
//! | 0      | [u8;8] | magic `TPFIELD1`              |
//! | 8      | u32    | n (dimension per photon)      |
//! | 12     | u32    | points per axis               |
//! | 16     | f64    | box half-width                |
//! | 24     | f64    | time                          |
//! | 32     | u32    | component count               |
//! | 36     | ...    | payload                       |
//!
//! The payload is `components * N^(2n)` complex64 values (f32 real, f32
//! imaginary), row-major over `(component, x1 axes, x2 axes)`.

use std::io::{Read, Write};

use num_complex::Complex;

use super::{FieldState, GridSpec, COMPONENTS};
use crate::error::{Error, Result};
use crate::scalar::Real;

pub const MAGIC: &[u8; 8] = b"TPFIELD1";

#[derive(Clone, Debug, PartialEq)]
pub struct SnapshotHeader {
    pub n: u32,
    pub points_per_axis: u32,
    pub box_halfwidth: f64,
    pub time: f64,
    pub components: u32,
}

impl SnapshotHeader {
    pub fn payload_len(&self) -> usize {
        (self.points_per_axis as usize).pow(2 * self.n) * self.components as usize
    }

    /// Grid described by the header, completed with the time-stepping fields.
    pub fn grid<T: Real>(&self, dt: T, t_max: T) -> Result<GridSpec<T>> {
        GridSpec::new(self.n as usize, self.points_per_axis as usize, T::lit(self.box_halfwidth), dt, t_max)
    }
}

pub fn write_snapshot<T: Real, W: Write>(mut w: W, state: &FieldState<T>) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&(state.grid.n as u32).to_le_bytes())?;
    w.write_all(&(state.grid.points_per_axis as u32).to_le_bytes())?;
    w.write_all(&state.grid.box_halfwidth.to_f64_lossy().to_le_bytes())?;
    w.write_all(&state.time.to_f64_lossy().to_le_bytes())?;
    w.write_all(&(COMPONENTS as u32).to_le_bytes())?;
    let mut buf = Vec::with_capacity(state.data.len() * 8);
    for z in &state.data {
        buf.extend_from_slice(&(z.re.to_f64_lossy() as f32).to_le_bytes());
        buf.extend_from_slice(&(z.im.to_f64_lossy() as f32).to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

fn read_array<const K: usize, R: Read>(r: &mut R) -> Result<[u8; K]> {
    let mut b = [0u8; K];
    r.read_exact(&mut b).map_err(|e| Error::Format(format!("truncated snapshot header: {e}")))?;
    Ok(b)
}

pub fn read_snapshot<T: Real, R: Read>(mut r: R) -> Result<(SnapshotHeader, Vec<Complex<T>>)> {
    let magic: [u8; 8] = read_array(&mut r)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad snapshot magic".into()));
    }
    let header = SnapshotHeader {
        n: u32::from_le_bytes(read_array(&mut r)?),
        points_per_axis: u32::from_le_bytes(read_array(&mut r)?),
        box_halfwidth: f64::from_le_bytes(read_array(&mut r)?),
        time: f64::from_le_bytes(read_array(&mut r)?),
        components: u32::from_le_bytes(read_array(&mut r)?),
    };
    if header.n == 0 || header.n > 4 || header.points_per_axis == 0 || header.points_per_axis > 4096 {
        return Err(Error::Format(format!("implausible snapshot header {header:?}")));
    }
    let len = header.payload_len();
    let mut bytes = vec![0u8; len * 8];
    r.read_exact(&mut bytes).map_err(|e| Error::Format(format!("truncated snapshot payload: {e}")))?;
    let data = bytes
        .chunks_exact(8)
        .map(|ch| {
            let re = f32::from_le_bytes([ch[0], ch[1], ch[2], ch[3]]);
            let im = f32::from_le_bytes([ch[4], ch[5], ch[6], ch[7]]);
            Complex::new(T::lit(re as f64), T::lit(im as f64))
        })
        .collect();
    Ok((header, data))
}

impl<T: Real> FieldState<T> {
    pub fn from_snapshot(header: &SnapshotHeader, data: Vec<Complex<T>>, dt: T, t_max: T) -> Result<Self> {
        if header.components as usize != COMPONENTS {
            return Err(Error::Format(format!("expected {COMPONENTS} components, found {}", header.components)));
        }
        let grid = header.grid(dt, t_max)?;
        FieldState::from_data(&grid, data, T::lit(header.time))
    }
}
