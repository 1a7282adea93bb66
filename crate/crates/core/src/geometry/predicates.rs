use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::region::{dist, Region};
use crate::error::{Error, Result};
use crate::scalar::{c, Real};

/// Resolutions of the sampled set predicates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sampling<T> {
    /// Lattice spacing used for `W_1`, `W_2`, `Sigma` and ball samples.
    pub step: T,
    /// Spacing of samples along segments and rays.
    pub segment_step: T,
    /// Lattice spacing for `S` (candidate sources and equidistance search).
    pub source_step: T,
    /// Equidistance tolerance.
    pub tol: T,
    /// Upper bound on the number of candidate `z` examined.
    pub max_candidates: usize,
    /// Restrict `y` and `z` to the diagonal `y_1 = y_2`.
    pub diagonal: bool,
}

impl<T: Real> Sampling<T> {
    pub fn new(step: T) -> Self {
        Sampling {
            step,
            segment_step: step * c(0.5),
            source_step: step * c(2.0),
            tol: step,
            max_candidates: 64,
            diagonal: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.step > T::zero() && self.segment_step > T::zero() && self.source_step > T::zero() && self.tol > T::zero())
        {
            return Err(Error::validation("sampling steps and tolerance must be positive"));
        }
        if self.segment_step > self.step * c(0.5) * c(1.0 + 1e-12) {
            return Err(Error::validation("segment step must not exceed half the sampling step"));
        }
        Ok(())
    }
}

fn lerp<T: Real>(a: &[T], b: &[T], s: T) -> Vec<T> {
    a.iter().zip(b).map(|(x, y)| *x + (*y - *x) * s).collect()
}

/// True iff one of the equally spaced samples of `[a; b]`, endpoints
/// included, at spacing at most `step`, lies in `region`.
pub fn segment_hits<T: Real>(region: &Region<T>, a: &[T], b: &[T], step: T) -> bool {
    first_segment_hit(region, a, b, step).is_some()
}

pub(crate) fn first_segment_hit<T: Real>(region: &Region<T>, a: &[T], b: &[T], step: T) -> Option<Vec<T>> {
    if region.is_empty_descriptor() {
        return None;
    }
    let len = dist(a, b);
    let k = (len / step).ceil().to_usize().unwrap_or(0).max(1);
    (0..=k)
        .map(|i| lerp(a, b, T::from_usize_lossy(i) / T::from_usize_lossy(k)))
        .find(|p| region.contains(p))
}

/// Does the ray from `p` through `q`, at parameters `>= 1`, meet `target`?
pub(crate) fn ray_reaches<T: Real>(p: &[T], q: &[T], target: &Region<T>, step: T) -> bool {
    let Some((lo, hi)) = target.bounds() else {
        return false;
    };
    let len = dist(p, q);
    if len == T::zero() {
        return false;
    }
    let d: Vec<T> = p.iter().zip(q).map(|(a, b)| (*b - *a) / len).collect();
    // slab test against the bounding box, parameter measured from q
    let mut t0 = T::zero();
    let mut t1 = T::infinity();
    for a in 0..q.len() {
        if d[a].abs() < T::epsilon() {
            if q[a] < lo[a] || q[a] > hi[a] {
                return false;
            }
        } else {
            let (u, v) = ((lo[a] - q[a]) / d[a], (hi[a] - q[a]) / d[a]);
            t0 = t0.max(u.min(v));
            t1 = t1.min(u.max(v));
        }
    }
    if t0 > t1 {
        return false;
    }
    let k = ((t1 - t0) / step).ceil().to_usize().unwrap_or(0);
    (0..=k).any(|i| {
        let t = t0 + (t1 - t0) * T::from_usize_lossy(i) / T::from_usize_lossy(k.max(1));
        let x: Vec<T> = q.iter().zip(&d).map(|(a, b)| *a + *b * t).collect();
        target.contains(&x)
    })
}

/// First sample of `Sigma` (in the given order) not lit from `p` through `x2`.
pub(crate) fn first_unlit<T: Real>(p: &[T], x2: &Region<T>, sigma_samples: &[Vec<T>], step: T) -> Option<Vec<T>> {
    sigma_samples.iter().find(|q| !ray_reaches(p, q, x2, step)).cloned()
}

/// `Sigma ⊂ (p; X_2]` at the sampling resolution: every sample `q` of
/// `Sigma` has a point of `X_2` on the ray from `p` beyond `q`.
pub fn illuminated_from<T: Real>(p: &[T], x2: &Region<T>, sigma: &Region<T>, sampling: &Sampling<T>) -> Result<bool> {
    if sigma.contains(p) {
        return Err(Error::precondition(format!("illumination point {p:?} lies in Sigma")));
    }
    let samples = sigma.samples(sampling.step);
    Ok(first_unlit(p, x2, &samples, sampling.segment_step).is_none())
}

/// Sampled `S` prepared for repeated equidistance queries.
pub struct EquidistanceSearch<'a, T: Real> {
    region: &'a Region<T>,
    step: T,
    tol: T,
    keys: Vec<Vec<i64>>,
    points: Vec<Vec<T>>,
    lookup: HashMap<Vec<i64>, usize>,
    diagonal: bool,
}

impl<'a, T: Real> EquidistanceSearch<'a, T> {
    pub fn new(s: &'a Region<T>, sampling: &Sampling<T>) -> Self {
        let step = sampling.source_step;
        let points: Vec<Vec<T>> = if sampling.diagonal {
            diagonal_samples(s, step)
        } else {
            s.samples(step)
        };
        let keys: Vec<Vec<i64>> =
            points.iter().map(|p| p.iter().map(|x| (*x / step).round().to_i64().unwrap()).collect()).collect();
        let lookup = keys.iter().cloned().enumerate().map(|(i, k)| (k, i)).collect();
        EquidistanceSearch { region: s, step, tol: sampling.tol, keys, points, lookup, diagonal: sampling.diagonal }
    }

    pub fn samples(&self) -> &[Vec<T>] {
        &self.points
    }

    fn residual(x1: &[T], x2: &[T], y: &[T]) -> T {
        let n = x1.len();
        dist(x1, &y[..n]) - dist(x2, &y[n..])
    }

    /// First lexicographic sample with residual below `tol`, otherwise a
    /// bisection along the first lattice edge of `S` with a sign change.
    pub fn find(&self, x1: &[T], x2: &[T]) -> Option<Vec<T>> {
        let f: Vec<T> = self.points.iter().map(|y| Self::residual(x1, x2, y)).collect();
        if let Some(i) = f.iter().position(|v| v.abs() < self.tol) {
            return Some(self.points[i].clone());
        }
        let dims = self.keys.first()?.len();
        let n = dims / 2;
        for (i, key) in self.keys.iter().enumerate() {
            if f[i] >= T::zero() {
                continue;
            }
            let moves: Vec<Vec<i64>> = if self.diagonal {
                (0..n)
                    .flat_map(|a| [-1i64, 1].map(|s| (0..dims).map(|b| if b % n == a { s } else { 0 }).collect()))
                    .collect()
            } else {
                (0..dims).flat_map(|a| [-1i64, 1].map(|s| (0..dims).map(|b| if b == a { s } else { 0 }).collect())).collect()
            };
            for m in moves {
                let nb: Vec<i64> = key.iter().zip(&m).map(|(a, b)| a + b).collect();
                let Some(&j) = self.lookup.get(&nb) else { continue };
                if f[j] <= T::zero() {
                    continue;
                }
                if let Some(y) = self.bisect(x1, x2, &self.points[i], &self.points[j]) {
                    return Some(y);
                }
            }
        }
        None
    }

    fn bisect(&self, x1: &[T], x2: &[T], neg: &[T], pos: &[T]) -> Option<Vec<T>> {
        let (mut a, mut b) = (neg.to_vec(), pos.to_vec());
        for _ in 0..80 {
            let m = lerp(&a, &b, c(0.5));
            let fm = Self::residual(x1, x2, &m);
            if fm.abs() < self.tol * c(0.5) {
                return self.region.contains(&m).then_some(m);
            }
            if fm < T::zero() {
                a = m;
            } else {
                b = m;
            }
            if dist(&a, &b) < self.step * c(1e-9) {
                break;
            }
        }
        None
    }
}

fn diagonal_samples<T: Real>(s: &Region<T>, step: T) -> Vec<Vec<T>> {
    let Some((lo, hi)) = s.bounds() else {
        return Vec::new();
    };
    let n = lo.len() / 2;
    let lo_d: Vec<T> = (0..n).map(|a| lo[a].max(lo[a + n])).collect();
    let hi_d: Vec<T> = (0..n).map(|a| hi[a].min(hi[a + n])).collect();
    if lo_d.iter().zip(&hi_d).any(|(a, b)| a > b) {
        return Vec::new();
    }
    Region::cuboid(lo_d, hi_d)
        .samples(step)
        .into_iter()
        .map(|p| p.iter().chain(&p).copied().collect::<Vec<T>>())
        .filter(|y| s.contains(y))
        .collect()
}

/// `y ∈ S` with `||x1 - y1| - |x2 - y2|| < tol`, or `None` when no sign
/// change of the residual is found on the sampled `S`.
pub fn find_equidistant_source<T: Real>(x1: &[T], x2: &[T], s: &Region<T>, sampling: &Sampling<T>) -> Option<Vec<T>> {
    EquidistanceSearch::new(s, sampling).find(x1, x2)
}
