use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{illuminated_from, segment_hits, ConditionWitness, Region};
use crate::scalar::{c, Real};

/// Requested ray counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanCounts<T> {
    pub vertices: usize,
    pub targets_per_vertex: usize,
    /// Largest tolerated gap (radians) between neighbouring ray directions
    /// that cross `Sigma`.
    pub max_angular_gap: T,
}

/// A measurement ray pair: reference ray 1 from `y1` and the tomographic
/// ray 2 from `y2`, both of length `length`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlannedRay<T> {
    pub y1: Vec<T>,
    pub kappa1: Vec<T>,
    pub y2: Vec<T>,
    pub kappa2: Vec<T>,
    pub length: T,
}

impl<T: Real> PlannedRay<T> {
    pub fn end1(&self) -> Vec<T> {
        self.y1.iter().zip(&self.kappa1).map(|(y, k)| *y + *k * self.length).collect()
    }

    pub fn end2(&self) -> Vec<T> {
        self.y2.iter().zip(&self.kappa2).map(|(y, k)| *y + *k * self.length).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayPlan<T> {
    pub rays: Vec<PlannedRay<T>>,
    /// Targets for which no admissible reference ray was found.
    pub rejected: Vec<String>,
    /// Largest gap between sorted directions of rays crossing `Sigma`
    /// (two dimensions only; zero otherwise).
    pub angular_gap: T,
    pub warnings: Vec<String>,
}

fn unit<T: Real>(a: &[T], b: &[T]) -> (Vec<T>, T) {
    let d: Vec<T> = a.iter().zip(b).map(|(p, q)| *q - *p).collect();
    let len = d.iter().map(|x| *x * *x).sum::<T>().sqrt();
    (d.into_iter().map(|x| x / len).collect(), len)
}

/// Vertices in the ball `Y_2`: a golden-angle spiral in two dimensions,
/// the centre plus axis points otherwise.
fn vertices<T: Real>(center: &[T], radius: T, count: usize) -> Vec<Vec<T>> {
    if count == 0 {
        return Vec::new();
    }
    let r = radius * c(0.9);
    if center.len() == 2 {
        let golden = T::PI() * (c::<T>(3.0) - c::<T>(5.0).sqrt());
        return (0..count)
            .map(|i| {
                let fi = T::from_usize_lossy(i);
                let rr = r * ((fi + c(0.5)) / T::from_usize_lossy(count)).sqrt();
                let th = golden * fi;
                vec![center[0] + rr * th.cos(), center[1] + rr * th.sin()]
            })
            .collect();
    }
    let mut out = vec![center.to_vec()];
    for a in 0..center.len() {
        for s in [T::one(), -T::one()] {
            let mut p = center.to_vec();
            p[a] += s * r;
            out.push(p);
        }
    }
    out.truncate(count);
    out
}

/// Emit ray pairs from vertices in `Y_2` towards samples of `X_2`, each
/// with an equal-length reference ray from `z_1` towards a point of `X_1`
/// that stays clear of `Sigma`.
pub fn plan_rays<T: Real>(witness: &ConditionWitness<T>, sigma: &Region<T>, counts: &PlanCounts<T>) -> Result<RayPlan<T>> {
    let (Some(z1), true) = (&witness.z1, witness.passed()) else {
        return Err(Error::precondition("ray planning needs a passing witness"));
    };
    let (Some(y2), Some(x2)) = (&witness.y2, &witness.x2_region) else {
        return Err(Error::precondition("ray planning needs the Y2/X2 construction in the witness"));
    };
    let sp = &witness.sampling;
    let mut plan = RayPlan { rays: Vec::new(), rejected: Vec::new(), angular_gap: T::zero(), warnings: Vec::new() };
    if counts.vertices == 0 || counts.targets_per_vertex == 0 {
        return Ok(plan);
    }
    let targets = x2.samples(sp.step);
    if targets.is_empty() {
        return Err(Error::precondition("X2 has no samples at the witness resolution"));
    }
    for v in vertices(&y2.center, y2.radius, counts.vertices) {
        let mut by_angle: Vec<(T, &Vec<T>)> = targets
            .iter()
            .map(|x| {
                let (d, _) = unit(&v, x);
                let angle = if d.len() >= 2 { d[1].atan2(d[0]) } else { d[0] };
                (angle, x)
            })
            .collect();
        by_angle.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite angles"));
        let m = counts.targets_per_vertex.min(by_angle.len());
        for j in 0..m {
            let idx = if m == 1 { by_angle.len() / 2 } else { j * (by_angle.len() - 1) / (m - 1) };
            let target = by_angle[idx].1;
            let (kappa2, length) = unit(&v, target);
            let mut partners: Vec<(T, Vec<T>)> = witness
                .x1
                .iter()
                .map(|x1| {
                    let (k1, _) = unit(z1, x1);
                    (k1.iter().zip(&kappa2).map(|(a, b)| *a * *b).sum(), k1)
                })
                .collect();
            partners.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite dots"));
            let chosen = partners.into_iter().find(|(dot, k1)| {
                let end: Vec<T> = z1.iter().zip(k1).map(|(y, k)| *y + *k * length).collect();
                *dot < c(1.0 - 1e-9) && !segment_hits(sigma, z1, &end, sp.segment_step)
            });
            match chosen {
                Some((_, kappa1)) => plan.rays.push(PlannedRay { y1: z1.clone(), kappa1, y2: v.clone(), kappa2, length }),
                None => plan.rejected.push(format!("vertex {v:?} target {target:?}: every reference ray of length {length} meets Sigma")),
            }
        }
    }
    if sigma.dim() == 2 && !sigma.is_empty_descriptor() {
        let mut angles: Vec<T> = plan
            .rays
            .iter()
            .filter(|r| segment_hits(sigma, &r.y2, &r.end2(), sp.segment_step))
            .map(|r| r.kappa2[1].atan2(r.kappa2[0]))
            .collect();
        angles.sort_by(|a, b| a.partial_cmp(b).expect("finite angles"));
        if angles.is_empty() && !sigma.samples(sp.step).is_empty() {
            plan.warnings.push("no planned ray crosses Sigma".into());
        }
        plan.angular_gap = angles.windows(2).map(|w| w[1] - w[0]).fold(T::zero(), T::max);
        if plan.angular_gap > counts.max_angular_gap {
            plan.warnings.push(format!(
                "angular gap {} rad between rays crossing Sigma exceeds {}",
                plan.angular_gap, counts.max_angular_gap
            ));
        }
    }
    Ok(plan)
}

/// Re-check one planned ray against the geometric clauses: vertex in
/// `Y_2`, Sigma lit from the vertex towards `X_2`, end point in `X_2`,
/// reference ray clear of Sigma, equal lengths by construction.
pub fn verify_planned_ray<T: Real>(ray: &PlannedRay<T>, witness: &ConditionWitness<T>, sigma: &Region<T>) -> bool {
    let (Some(z1), Some(y2), Some(x2)) = (&witness.z1, &witness.y2, &witness.x2_region) else {
        return false;
    };
    let sp = &witness.sampling;
    let lit = if sigma.contains(&ray.y2) { false } else { matches!(illuminated_from(&ray.y2, x2, sigma, sp), Ok(true)) };
    ray.y1 == *z1
        && y2.region().contains(&ray.y2)
        && lit
        && x2.depth(&ray.end2()) > c(-1e-9)
        && !segment_hits(sigma, &ray.y1, &ray.end1(), sp.segment_step)
}
