use serde::{Deserialize, Serialize};

use crate::evolution::DensityField;
use crate::scalar::{c, Real};

/// A closed subset of `R^d` described analytically or by grid cells.
///
/// `depth` is a signed distance-like function: positive in the interior,
/// zero on the boundary, negative outside. For balls and boxes it is the
/// exact distance to the boundary inside.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Region<T> {
    Empty { dim: usize },
    Ball { center: Vec<T>, radius: T },
    Box { lo: Vec<T>, hi: Vec<T> },
    UnionOfBalls { centers: Vec<Vec<T>>, radii: Vec<T> },
    /// Union of closed cubes of side `spacing` centred at
    /// `origin + spacing * cell`; `cells` is kept sorted.
    GridThreshold { origin: T, spacing: T, dim: usize, cells: Vec<Vec<i64>> },
    /// `A x B` in `R^{dim A + dim B}`.
    Product { first: Box<Region<T>>, second: Box<Region<T>> },
    /// Points of `inner` whose depth exceeds `margin`.
    Eroded { inner: Box<Region<T>>, margin: T },
    /// `keep` minus the closed set `remove`.
    Difference { keep: Box<Region<T>>, remove: Box<Region<T>> },
}

pub(crate) fn dist<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| (*x - *y) * (*x - *y)).sum::<T>().sqrt()
}

impl<T: Real> Region<T> {
    pub fn ball(center: Vec<T>, radius: T) -> Self {
        Region::Ball { center, radius }
    }

    pub fn cuboid(lo: Vec<T>, hi: Vec<T>) -> Self {
        Region::Box { lo, hi }
    }

    pub fn product(first: Region<T>, second: Region<T>) -> Self {
        Region::Product { first: Box::new(first), second: Box::new(second) }
    }

    pub fn eroded(inner: Region<T>, margin: T) -> Self {
        Region::Eroded { inner: Box::new(inner), margin }
    }

    pub fn difference(keep: Region<T>, remove: Region<T>) -> Self {
        Region::Difference { keep: Box::new(keep), remove: Box::new(remove) }
    }

    pub fn grid_cells(origin: T, spacing: T, dim: usize, mut cells: Vec<Vec<i64>>) -> Self {
        cells.sort();
        cells.dedup();
        Region::GridThreshold { origin, spacing, dim, cells }
    }

    /// `Sigma` as the union of grid cells where `rho > 1e-6 max rho`.
    pub fn from_density(rho: &DensityField<T>) -> Self {
        let cells = rho
            .support_indices()
            .into_iter()
            .map(|i| rho.multi_index(i).into_iter().map(|k| k as i64).collect())
            .collect();
        Self::grid_cells(-rho.box_halfwidth, rho.spacing(), rho.n, cells)
    }

    pub fn dim(&self) -> usize {
        match self {
            Region::Empty { dim } => *dim,
            Region::Ball { center, .. } => center.len(),
            Region::Box { lo, .. } => lo.len(),
            Region::UnionOfBalls { centers, .. } => centers.first().map_or(0, Vec::len),
            Region::GridThreshold { dim, .. } => *dim,
            Region::Product { first, second } => first.dim() + second.dim(),
            Region::Eroded { inner, .. } => inner.dim(),
            Region::Difference { keep, .. } => keep.dim(),
        }
    }

    pub fn is_empty_descriptor(&self) -> bool {
        match self {
            Region::Empty { .. } => true,
            Region::UnionOfBalls { centers, .. } => centers.is_empty(),
            Region::GridThreshold { cells, .. } => cells.is_empty(),
            _ => false,
        }
    }

    pub fn validate(&self) -> crate::Result<()> {
        let bad = |m: String| Err(crate::Error::validation(m));
        match self {
            Region::Ball { radius, center } => {
                if !(*radius >= T::zero()) || center.iter().any(|x| !x.is_finite()) {
                    return bad(format!("ball needs finite center and radius >= 0, got radius {radius}"));
                }
            }
            Region::Box { lo, hi } => {
                if lo.len() != hi.len() || lo.iter().zip(hi).any(|(a, b)| !(a <= b)) {
                    return bad("box needs lo <= hi componentwise".into());
                }
            }
            Region::UnionOfBalls { centers, radii } => {
                let d = self.dim();
                if centers.len() != radii.len() || centers.iter().any(|c| c.len() != d) {
                    return bad("union of balls needs one radius per center and equal dimensions".into());
                }
            }
            Region::GridThreshold { spacing, cells, dim, .. } => {
                if !(*spacing > T::zero()) || cells.iter().any(|c| c.len() != *dim) {
                    return bad("grid threshold needs spacing > 0 and cells of matching dimension".into());
                }
            }
            Region::Product { first, second } => {
                first.validate()?;
                second.validate()?;
            }
            Region::Eroded { inner, margin } => {
                if !(*margin >= T::zero()) {
                    return bad(format!("erosion margin must be >= 0, got {margin}"));
                }
                inner.validate()?;
            }
            Region::Difference { keep, remove } => {
                if keep.dim() != remove.dim() {
                    return bad("difference of regions of different dimension".into());
                }
                keep.validate()?;
                remove.validate()?;
            }
            Region::Empty { .. } => {}
        }
        Ok(())
    }

    fn cell_of(origin: T, spacing: T, x: &[T]) -> Vec<i64> {
        x.iter().map(|v| ((*v - origin) / spacing).round().to_i64().unwrap_or(i64::MIN)).collect()
    }

    pub fn contains(&self, x: &[T]) -> bool {
        match self {
            Region::Empty { .. } => false,
            Region::GridThreshold { origin, spacing, cells, .. } => {
                cells.binary_search(&Self::cell_of(*origin, *spacing, x)).is_ok()
            }
            Region::Product { first, second } => {
                let d = first.dim();
                first.contains(&x[..d]) && second.contains(&x[d..])
            }
            Region::Difference { keep, remove } => keep.contains(x) && !remove.contains(x),
            _ => self.depth(x) >= T::zero(),
        }
    }

    pub fn depth(&self, x: &[T]) -> T {
        match self {
            Region::Empty { .. } => T::neg_infinity(),
            Region::Ball { center, radius } => *radius - dist(x, center),
            Region::Box { lo, hi } => {
                let mut inside = T::infinity();
                let mut outside = T::zero();
                for ((v, a), b) in x.iter().zip(lo).zip(hi) {
                    let d = (*v - *a).min(*b - *v);
                    inside = inside.min(d);
                    if d < T::zero() {
                        outside += d * d;
                    }
                }
                if inside >= T::zero() {
                    inside
                } else {
                    -outside.sqrt()
                }
            }
            Region::UnionOfBalls { centers, radii } => centers
                .iter()
                .zip(radii)
                .map(|(c, r)| *r - dist(x, c))
                .fold(T::neg_infinity(), T::max),
            Region::GridThreshold { origin, spacing, cells, .. } => {
                let half = *spacing * c(0.5);
                let cheb = |cell: &Vec<i64>| {
                    cell.iter()
                        .zip(x)
                        .map(|(k, v)| (*v - (*origin + *spacing * T::from_i64(*k).unwrap())).abs())
                        .fold(T::zero(), T::max)
                };
                let own = Self::cell_of(*origin, *spacing, x);
                if cells.binary_search(&own).is_ok() {
                    half - cheb(&own)
                } else {
                    -(cells.iter().map(cheb).fold(T::infinity(), T::min) - half)
                }
            }
            Region::Product { first, second } => {
                let d = first.dim();
                first.depth(&x[..d]).min(second.depth(&x[d..]))
            }
            Region::Eroded { inner, margin } => inner.depth(x) - *margin,
            Region::Difference { keep, remove } => keep.depth(x).min(-remove.depth(x)),
        }
    }

    /// Axis-aligned bounding box `(lo, hi)`; `None` for empty regions.
    pub fn bounds(&self) -> Option<(Vec<T>, Vec<T>)> {
        match self {
            Region::Empty { .. } => None,
            Region::Ball { center, radius } => Some((
                center.iter().map(|x| *x - *radius).collect(),
                center.iter().map(|x| *x + *radius).collect(),
            )),
            Region::Box { lo, hi } => Some((lo.clone(), hi.clone())),
            Region::UnionOfBalls { centers, radii } => {
                let mut out: Option<(Vec<T>, Vec<T>)> = None;
                for (c, r) in centers.iter().zip(radii) {
                    let b = Region::ball(c.clone(), *r).bounds().unwrap();
                    out = Some(match out {
                        None => b,
                        Some((lo, hi)) => (
                            lo.iter().zip(&b.0).map(|(a, b)| a.min(*b)).collect(),
                            hi.iter().zip(&b.1).map(|(a, b)| a.max(*b)).collect(),
                        ),
                    });
                }
                out
            }
            Region::GridThreshold { origin, spacing, cells, dim } => {
                if cells.is_empty() {
                    return None;
                }
                let half = *spacing * c(0.5);
                let mut lo = vec![T::infinity(); *dim];
                let mut hi = vec![T::neg_infinity(); *dim];
                for cell in cells {
                    for (a, k) in cell.iter().enumerate() {
                        let x = *origin + *spacing * T::from_i64(*k).unwrap();
                        lo[a] = lo[a].min(x - half);
                        hi[a] = hi[a].max(x + half);
                    }
                }
                Some((lo, hi))
            }
            Region::Product { first, second } => {
                let (mut lo, mut hi) = first.bounds()?;
                let (lo2, hi2) = second.bounds()?;
                lo.extend(lo2);
                hi.extend(hi2);
                Some((lo, hi))
            }
            Region::Eroded { inner, .. } => inner.bounds(),
            Region::Difference { keep, .. } => keep.bounds(),
        }
    }

    /// Lattice points `step * k` inside the region, in lexicographic order.
    /// Grid-threshold sets sampled no finer than their cells yield the cell
    /// centres instead.
    pub fn samples(&self, step: T) -> Vec<Vec<T>> {
        if let Region::GridThreshold { origin, spacing, cells, .. } = self {
            if step >= *spacing {
                return cells
                    .iter()
                    .map(|cell| cell.iter().map(|k| *origin + *spacing * T::from_i64(*k).unwrap()).collect())
                    .collect();
            }
        }
        let Some((lo, hi)) = self.bounds() else {
            return Vec::new();
        };
        let ranges: Vec<(i64, i64)> = lo
            .iter()
            .zip(&hi)
            .map(|(a, b)| ((*a / step).ceil().to_i64().unwrap(), (*b / step).floor().to_i64().unwrap()))
            .collect();
        if ranges.iter().any(|(a, b)| a > b) {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut k: Vec<i64> = ranges.iter().map(|r| r.0).collect();
        loop {
            let p: Vec<T> = k.iter().map(|&i| step * T::from_i64(i).unwrap()).collect();
            if self.contains(&p) {
                out.push(p);
            }
            let mut a = k.len();
            loop {
                if a == 0 {
                    return out;
                }
                a -= 1;
                if k[a] < ranges[a].1 {
                    k[a] += 1;
                    break;
                }
                k[a] = ranges[a].0;
            }
        }
    }
}

/// Ball descriptor used for `Y_2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallSpec<T> {
    pub center: Vec<T>,
    pub radius: T,
}

impl<T: Real> BallSpec<T> {
    pub fn region(&self) -> Region<T> {
        Region::ball(self.center.clone(), self.radius)
    }
}
