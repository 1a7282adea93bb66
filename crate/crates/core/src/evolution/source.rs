use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::bump;
use crate::scalar::{c, Real};
use crate::spectral::GridSpec;

/// Smooth temporal envelope supported in `(start, end)` with an optional
/// temporal carrier `exp(-i carrier (t - t_mid))`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TemporalWindow<T> {
    pub start: T,
    pub end: T,
    /// Temporal angular frequency; for a packet on the characteristic set
    /// this is `|k1| + |k2|`.
    pub carrier: T,
}

impl<T: Real> TemporalWindow<T> {
    pub fn mid(&self) -> T {
        (self.start + self.end) * c(0.5)
    }

    pub fn value(&self, t: T) -> Complex<T> {
        if !(t > self.start && t < self.end) {
            return Complex::default();
        }
        let half = (self.end - self.start) * c(0.5);
        let u = (t - self.mid()) / half;
        Complex::from_polar(bump(u), -self.carrier * (t - self.mid()))
    }

    pub fn is_active(&self, t: T) -> bool {
        t > self.start && t < self.end
    }
}

/// Gaussian wave packet `A exp(-|x1-y1|^2/2w^2 - |x2-y2|^2/2w^2)
/// exp(i k1.(x1-y1) + i k2.(x2-y2))` times a temporal window.  An infinite
/// width gives a plane wave.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WavePacket<T> {
    pub center1: Vec<T>,
    pub center2: Vec<T>,
    pub width: T,
    pub carrier1: Vec<T>,
    pub carrier2: Vec<T>,
    pub amplitude: [T; 2],
    pub window: TemporalWindow<T>,
}

impl<T: Real> WavePacket<T> {
    pub fn amplitude(&self) -> Complex<T> {
        Complex::new(self.amplitude[0], self.amplitude[1])
    }

    /// Photon factor centred at `y` with carrier `k`, sampled on one block.
    pub fn block_profile(grid: &GridSpec<T>, y: &[T], k: &[T], width: T) -> Vec<Complex<T>> {
        let two_w2 = width * width * c(2.0);
        (0..grid.block_len())
            .map(|idx| {
                let x = grid.block_point(idx);
                let mut r2 = T::zero();
                let mut phase = T::zero();
                for a in 0..grid.n {
                    let d = x[a] - y[a];
                    r2 += d * d;
                    phase += k[a] * d;
                }
                let env = if width.is_infinite() { T::one() } else { (-r2 / two_w2).exp() };
                Complex::from_polar(env, phase)
            })
            .collect()
    }

    fn validate(&self, n: usize) -> Result<()> {
        for v in [&self.center1, &self.center2, &self.carrier1, &self.carrier2] {
            if v.len() != n {
                return Err(Error::config(format!("wave packet vectors must have length n = {n}")));
            }
        }
        if !(self.width > T::zero()) {
            return Err(Error::config("wave packet width must be positive"));
        }
        if !(self.window.start > T::zero()) || !(self.window.end > self.window.start) {
            return Err(Error::config(format!(
                "source window ({}, {}) must satisfy 0 < start < end",
                self.window.start, self.window.end
            )));
        }
        Ok(())
    }

    /// Radius beyond which the envelope is below `exp(-8)` of its peak.
    pub fn support_radius(&self) -> T {
        let norm = |v: &[T]| v.iter().map(|x| *x * *x).sum::<T>().sqrt();
        norm(&self.center1).max(norm(&self.center2)) + self.width * c(4.0)
    }
}

/// Source `f = (f0, 0, 0, 0)`; `f0` is a sum of wave packets, each
/// symmetrized as `(p(x1, x2) + p(x2, x1)) / 2` so that it is exchange
/// symmetric on the grid exactly.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec<T> {
    pub packets: Vec<WavePacket<T>>,
}

impl<T: Real> SourceSpec<T> {
    pub fn zero() -> Self {
        SourceSpec { packets: Vec::new() }
    }

    pub fn single(packet: WavePacket<T>) -> Self {
        SourceSpec { packets: vec![packet] }
    }

    pub fn is_zero(&self) -> bool {
        self.packets.iter().all(|p| p.amplitude() == Complex::default())
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        self.packets.iter().try_for_each(|p| p.validate(n))
    }

    /// `self * a`
    pub fn scaled(&self, a: Complex<T>) -> Self {
        let packets = self
            .packets
            .iter()
            .map(|p| {
                let z = p.amplitude() * a;
                WavePacket { amplitude: [z.re, z.im], ..p.clone() }
            })
            .collect();
        SourceSpec { packets }
    }

    /// `self + a * other`; the result drives the solution `u^self + a u^other`.
    pub fn combined(&self, a: Complex<T>, other: &Self) -> Self {
        let mut packets = self.packets.clone();
        packets.extend(other.scaled(a).packets);
        SourceSpec { packets }
    }

    pub fn window(&self) -> Option<(T, T)> {
        self.packets.iter().fold(None, |acc, p| {
            let (s, e) = (p.window.start, p.window.end);
            Some(match acc {
                None => (s, e),
                Some((a, b)) => (a.min(s), b.max(e)),
            })
        })
    }

    pub fn support_radius(&self) -> T {
        self.packets.iter().map(|p| p.support_radius()).fold(T::zero(), T::max)
    }

    /// `f0(t, x1, x2)` at one point.
    pub fn value_at(&self, t: T, x1: &[T], x2: &[T]) -> Complex<T> {
        let factor = |y: &[T], k: &[T], w: T, x: &[T]| {
            let mut r2 = T::zero();
            let mut phase = T::zero();
            for a in 0..x.len() {
                let d = x[a] - y[a];
                r2 += d * d;
                phase += k[a] * d;
            }
            let env = if w.is_infinite() { T::one() } else { (-r2 / (w * w * c(2.0))).exp() };
            Complex::from_polar(env, phase)
        };
        self.packets
            .iter()
            .map(|p| {
                let a = factor(&p.center1, &p.carrier1, p.width, x1) * factor(&p.center2, &p.carrier2, p.width, x2);
                let b = factor(&p.center1, &p.carrier1, p.width, x2) * factor(&p.center2, &p.carrier2, p.width, x1);
                p.window.value(t) * p.amplitude() * (a + b) * c::<T>(0.5)
            })
            .sum()
    }
}

/// A source sampled on the grid: per packet the two block factors.
pub(crate) struct PreparedSource<T: Real> {
    packets: Vec<PreparedPacket<T>>,
}

struct PreparedPacket<T: Real> {
    window: TemporalWindow<T>,
    amplitude: Complex<T>,
    a: Vec<Complex<T>>,
    b: Vec<Complex<T>>,
}

impl<T: Real> PreparedSource<T> {
    pub fn new(grid: &GridSpec<T>, source: &SourceSpec<T>) -> Result<Self> {
        source.validate(grid.n)?;
        let packets = source
            .packets
            .iter()
            .filter(|p| p.amplitude() != Complex::default())
            .map(|p| PreparedPacket {
                window: p.window.clone(),
                amplitude: p.amplitude(),
                a: WavePacket::block_profile(grid, &p.center1, &p.carrier1, p.width),
                b: WavePacket::block_profile(grid, &p.center2, &p.carrier2, p.width),
            })
            .collect();
        Ok(PreparedSource { packets })
    }

    pub fn is_active(&self, t: T) -> bool {
        self.packets.iter().any(|p| p.window.is_active(t))
    }

    /// `u0 += scale * f0(t)` on the grid.
    pub fn inject(&self, t: T, scale: Complex<T>, u0: &mut [Complex<T>]) {
        use rayon::prelude::*;
        let active: Vec<(Complex<T>, &PreparedPacket<T>)> = self
            .packets
            .iter()
            .filter(|p| p.window.is_active(t))
            .map(|p| (p.window.value(t) * p.amplitude * scale * c::<T>(0.5), p))
            .collect();
        if active.is_empty() {
            return;
        }
        let b = active[0].1.a.len();
        u0.par_chunks_mut(b).enumerate().for_each(|(i1, row)| {
            for (w, p) in &active {
                let a1 = p.a[i1] * *w;
                let b1 = p.b[i1] * *w;
                for ((z, a2), b2) in row.iter_mut().zip(&p.a).zip(&p.b) {
                    *z += a1 * *b2 + b1 * *a2;
                }
            }
        });
    }
}
