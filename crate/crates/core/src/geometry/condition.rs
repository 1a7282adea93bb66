use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::predicates::{first_segment_hit, first_unlit, illuminated_from, segment_hits, EquidistanceSearch, Sampling};
use super::region::{dist, BallSpec, Region};
use crate::error::{Error, Result};
use crate::scalar::{c, Real};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Clause {
    /// `Sigma ⊂ (z_2; W_2]`.
    Illumination,
    /// `[z_1; x_1] ∩ Sigma = ∅`.
    Avoidance,
    /// `|x_1 - z_1| = |x_2 - z_2|`.
    EqualDistance,
    /// Every `(x_1, x_2) ∈ X_1 x W_2` has an equidistant source in `S`.
    Equidistance,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
}

/// One `x_2 ∈ W_2` together with its partner `x_1 = x1[partner]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessPair<T> {
    pub x2: Vec<T>,
    pub partner: usize,
}

/// Equidistant source found for `(x1[x1_index], w2[w2_index])`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SourceWitness<T> {
    pub x1_index: usize,
    pub x2: Vec<T>,
    pub y: Vec<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Margins<T> {
    /// Smallest distance from a witness segment `[z_1; x_1]` to a sample of `Sigma`.
    pub avoidance_gap: T,
    /// Largest `||x_1 - z_1| - |x_2 - z_2||` over the pairs.
    pub distance_residual: T,
    /// Largest equidistance residual over the recorded sources.
    pub source_residual: T,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionWitness<T> {
    pub status: Status,
    pub sampling: Sampling<T>,
    pub z1: Option<Vec<T>>,
    pub z2: Option<Vec<T>>,
    pub x1: Vec<Vec<T>>,
    pub pairs: Vec<WitnessPair<T>>,
    pub sources: Vec<SourceWitness<T>>,
    pub margins: Option<Margins<T>>,
    pub failed_clause: Option<Clause>,
    /// Points exhibiting the failure: `[q]` for illumination, `[x2, x1]`
    /// for the pair clauses.
    pub offending: Vec<Vec<T>>,
    pub candidates_examined: usize,
    pub w2_samples: usize,
    pub sigma_samples: usize,
    pub x1_cardinality: usize,
    /// Largest angle (radians) between two directions `x_1 - z_1`, `x_1 ∈ X_1`.
    pub x1_direction_span: T,
    pub y2: Option<BallSpec<T>>,
    pub x2_region: Option<Region<T>>,
}

impl<T: Real + Serialize> ConditionWitness<T> {
    pub fn report(&self) -> String {
        serde_json::to_string_pretty(self).expect("witness serializes")
    }
}

impl<T: Real> ConditionWitness<T> {
    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }

    /// Re-run every clause predicate on the stored witnesses.
    pub fn reverify(&self, s: &Region<T>, w1: &Region<T>, w2: &Region<T>, sigma: &Region<T>) -> bool {
        if !self.passed() {
            return false;
        }
        let (Some(z1), Some(z2)) = (&self.z1, &self.z2) else {
            return false;
        };
        let sp = &self.sampling;
        let z: Vec<T> = z1.iter().chain(z2).copied().collect();
        if !s.contains(&z) || !matches!(illuminated_from(z2, w2, sigma, sp), Ok(true)) {
            return false;
        }
        if self.x1.iter().any(|x1| !w1.contains(x1) || segment_hits(sigma, z1, x1, sp.segment_step)) {
            return false;
        }
        let pairs_ok = self.pairs.iter().all(|p| {
            p.partner < self.x1.len()
                && w2.contains(&p.x2)
                && (dist(&self.x1[p.partner], z1) - dist(&p.x2, z2)).abs() < sp.tol
        });
        let n = z1.len();
        let sources_ok = self.sources.iter().all(|w| {
            w.x1_index < self.x1.len()
                && s.contains(&w.y)
                && (dist(&self.x1[w.x1_index], &w.y[..n]) - dist(&w.x2, &w.y[n..])).abs() < sp.tol
        });
        let construction_ok = match (&self.y2, &self.x2_region) {
            (Some(y2), Some(x2)) => verify_construction(z1, y2, x2, s, sigma, sp).is_ok(),
            (None, None) => true,
            _ => false,
        };
        pairs_ok && sources_ok && construction_ok
    }
}

struct Attempt<T> {
    progress: usize,
    clause: Option<Clause>,
    offending: Vec<Vec<T>>,
    x1: Vec<Vec<T>>,
    pairs: Vec<WitnessPair<T>>,
    sources: Vec<SourceWitness<T>>,
}

impl<T> Attempt<T> {
    fn fail(progress: usize, clause: Clause, offending: Vec<Vec<T>>) -> Self {
        Attempt { progress, clause: Some(clause), offending, x1: vec![], pairs: vec![], sources: vec![] }
    }
}

fn candidates<T: Real>(s: &Region<T>, sampling: &Sampling<T>, search: &EquidistanceSearch<'_, T>) -> Vec<Vec<T>> {
    let _ = s;
    let all = search.samples();
    let m = sampling.max_candidates.max(1);
    if all.len() <= m {
        return all.to_vec();
    }
    // evenly strided subset, keeping lexicographic order
    (0..m).map(|i| all[i * all.len() / m].clone()).collect()
}

fn try_candidate<T: Real>(
    z: &[T],
    w1s: &[Vec<T>],
    w2s: &[Vec<T>],
    sigma: &Region<T>,
    sigma_samples: &[Vec<T>],
    w2: &Region<T>,
    search: &EquidistanceSearch<'_, T>,
    sampling: &Sampling<T>,
) -> Attempt<T> {
    let n = z.len() / 2;
    let (z1, z2) = (&z[..n], &z[n..]);
    if sigma.contains(z2) {
        return Attempt::fail(0, Clause::Illumination, vec![z2.to_vec()]);
    }
    if let Some(q) = first_unlit(z2, w2, sigma_samples, sampling.segment_step) {
        return Attempt::fail(0, Clause::Illumination, vec![q]);
    }
    let d1: Vec<T> = w1s.iter().map(|x| dist(x, z1)).collect();
    let clear: Vec<bool> =
        w1s.iter().map(|x| first_segment_hit(sigma, z1, x, sampling.segment_step).is_none()).collect();
    let mut chosen: Vec<usize> = Vec::new();
    let mut pairs = Vec::new();
    let mut blocked: Option<Vec<Vec<T>>> = None;
    let mut unmatched: Option<Vec<Vec<T>>> = None;
    for x2 in w2s {
        let d2 = dist(x2, z2);
        let ok = |i: &usize| (d1[*i] - d2).abs() < sampling.tol;
        match (0..w1s.len()).find(|i| clear[*i] && ok(i)) {
            Some(i) => {
                let slot = match chosen.iter().position(|&j| j == i) {
                    Some(k) => k,
                    None => {
                        chosen.push(i);
                        chosen.len() - 1
                    }
                };
                pairs.push(WitnessPair { x2: x2.clone(), partner: slot });
            }
            None => match (0..w1s.len()).find(ok) {
                Some(i) => {
                    blocked.get_or_insert_with(|| vec![x2.clone(), w1s[i].clone()]);
                }
                None => {
                    let closest = (0..w1s.len()).min_by(|a, b| (d1[*a] - d2).abs().partial_cmp(&(d1[*b] - d2).abs()).unwrap());
                    let mut off = vec![x2.clone()];
                    off.extend(closest.map(|i| w1s[i].clone()));
                    unmatched.get_or_insert(off);
                }
            },
        }
    }
    if let Some(off) = blocked {
        return Attempt::fail(1, Clause::Avoidance, off);
    }
    if let Some(off) = unmatched {
        return Attempt::fail(2, Clause::EqualDistance, off);
    }
    let x1: Vec<Vec<T>> = chosen.iter().map(|&i| w1s[i].clone()).collect();
    let mut sources = Vec::new();
    for (k, a) in x1.iter().enumerate() {
        for b in w2s {
            match search.find(a, b) {
                Some(y) => sources.push(SourceWitness { x1_index: k, x2: b.clone(), y }),
                None => return Attempt::fail(3, Clause::Equidistance, vec![b.clone(), a.clone()]),
            }
        }
    }
    Attempt { progress: 4, clause: None, offending: vec![], x1, pairs, sources }
}

fn direction_span<T: Real>(z1: &[T], x1: &[Vec<T>]) -> T {
    let dirs: Vec<Vec<T>> = x1
        .iter()
        .map(|x| {
            let d = dist(x, z1);
            x.iter().zip(z1).map(|(a, b)| (*a - *b) / d).collect()
        })
        .collect();
    let mut best = T::zero();
    for (i, a) in dirs.iter().enumerate() {
        for b in &dirs[i + 1..] {
            let dot: T = a.iter().zip(b).map(|(x, y)| *x * *y).sum();
            best = best.max(dot.max(-T::one()).min(T::one()).acos());
        }
    }
    best
}

/// Search sampled `z ∈ S` and `X_1 ⊂ W_1` for a witness of the geometric
/// condition. Candidates are scanned lexicographically; among passing ones
/// the deepest point of `S` wins. Without a pass, the candidate that got furthest through the
/// clauses (illumination, avoidance, equal distance, equidistance) is
/// reported with its first violated clause.
pub fn check_condition1<T: Real>(
    s: &Region<T>,
    w1: &Region<T>,
    w2: &Region<T>,
    sigma: &Region<T>,
    sampling: &Sampling<T>,
) -> ConditionWitness<T> {
    let w1s = w1.samples(sampling.step);
    let w2s = w2.samples(sampling.step);
    let sigma_samples = sigma.samples(sampling.step);
    let search = EquidistanceSearch::new(s, sampling);
    let cands = candidates(s, sampling, &search);
    let attempts: Vec<Attempt<T>> = cands
        .par_iter()
        .map(|z| try_candidate(z, &w1s, &w2s, sigma, &sigma_samples, w2, &search, sampling))
        .collect();
    // furthest progress wins; passing candidates prefer the deepest point
    // of S, then lexicographic order
    let depth: Vec<T> = cands.iter().map(|z| s.depth(z)).collect();
    let best = attempts.iter().enumerate().fold(None::<usize>, |acc, (i, a)| match acc {
        Some(j) if attempts[j].progress > a.progress => Some(j),
        Some(j) if attempts[j].progress == a.progress && (a.progress < 4 || depth[j] >= depth[i]) => Some(j),
        _ => Some(i),
    });
    let mut witness = ConditionWitness {
        status: Status::Fail,
        sampling: sampling.clone(),
        z1: None,
        z2: None,
        x1: vec![],
        pairs: vec![],
        sources: vec![],
        margins: None,
        failed_clause: Some(Clause::Illumination),
        offending: vec![],
        candidates_examined: cands.len(),
        w2_samples: w2s.len(),
        sigma_samples: sigma_samples.len(),
        x1_cardinality: 0,
        x1_direction_span: T::zero(),
        y2: None,
        x2_region: None,
    };
    let Some(b) = best else {
        log::warn!("no candidate source samples in S");
        return witness;
    };
    let n = cands[b].len() / 2;
    let a = attempts.into_iter().nth(b).unwrap();
    let z1 = cands[b][..n].to_vec();
    let z2 = cands[b][n..].to_vec();
    witness.failed_clause = a.clause;
    witness.offending = a.offending;
    if a.progress == 4 {
        witness.status = Status::Pass;
        let gap = a
            .x1
            .iter()
            .flat_map(|x| sigma_samples.iter().map(|q| point_segment_distance(q, &z1, x)).collect::<Vec<_>>())
            .fold(T::infinity(), T::min);
        let distance_residual = a
            .pairs
            .iter()
            .map(|p| (dist(&a.x1[p.partner], &z1) - dist(&p.x2, &z2)).abs())
            .fold(T::zero(), T::max);
        let source_residual = a
            .sources
            .iter()
            .map(|w| (dist(&a.x1[w.x1_index], &w.y[..n]) - dist(&w.x2, &w.y[n..])).abs())
            .fold(T::zero(), T::max);
        witness.margins = Some(Margins { avoidance_gap: gap, distance_residual, source_residual });
        witness.x1_cardinality = a.x1.len();
        witness.x1_direction_span = direction_span(&z1, &a.x1);
        witness.x1 = a.x1;
        witness.pairs = a.pairs;
        witness.sources = a.sources;
    }
    witness.z1 = Some(z1);
    witness.z2 = Some(z2);
    witness
}

pub(crate) fn point_segment_distance<T: Real>(q: &[T], a: &[T], b: &[T]) -> T {
    let ab: Vec<T> = a.iter().zip(b).map(|(x, y)| *y - *x).collect();
    let len2: T = ab.iter().map(|v| *v * *v).sum();
    let s = if len2 == T::zero() {
        T::zero()
    } else {
        (q.iter().zip(a).zip(&ab).map(|((q, a), d)| (*q - *a) * *d).sum::<T>() / len2).max(T::zero()).min(T::one())
    };
    let p: Vec<T> = a.iter().zip(&ab).map(|(a, d)| *a + *d * s).collect();
    dist(q, &p)
}

/// Sample points of the closed ball: lattice points inside plus points on
/// the sphere along the axes and the diagonals of each coordinate plane.
fn ball_samples<T: Real>(ball: &BallSpec<T>, step: T) -> Vec<Vec<T>> {
    let r = ball.radius;
    let n = ball.center.len();
    let h = step.min(r * c(0.5)).max(r * c(0.125));
    let mut out: Vec<Vec<T>> = Region::ball(vec![T::zero(); n], r)
        .samples(h)
        .into_iter()
        .map(|p| p.iter().zip(&ball.center).map(|(a, b)| *a + *b).collect())
        .collect();
    let inv = T::one() / c::<T>(2.0).sqrt();
    for a in 0..n {
        for s in [-T::one(), T::one()] {
            let mut p = ball.center.clone();
            p[a] += s * r;
            out.push(p);
            for b in a + 1..n {
                for t in [-T::one(), T::one()] {
                    let mut p = ball.center.clone();
                    p[a] += s * r * inv;
                    p[b] += t * r * inv;
                    out.push(p);
                }
            }
        }
    }
    out
}

fn verify_construction<T: Real>(
    z1: &[T],
    y2: &BallSpec<T>,
    x2: &Region<T>,
    s: &Region<T>,
    sigma: &Region<T>,
    sampling: &Sampling<T>,
) -> std::result::Result<(), String> {
    let sigma_samples = sigma.samples(sampling.step);
    if let Some(q) = sigma_samples.iter().find(|q| dist(q, &y2.center) <= y2.radius) {
        return Err(format!("Y2 meets Sigma at {q:?}"));
    }
    if x2.samples(sampling.step).is_empty() {
        return Err("X2 has no sample points".into());
    }
    for q in ball_samples(y2, sampling.step) {
        if sigma.contains(&q) {
            return Err(format!("Y2 sample {q:?} lies in Sigma"));
        }
        if x2.contains(&q) {
            return Err(format!("Y2 sample {q:?} lies in X2"));
        }
        let zq: Vec<T> = z1.iter().chain(&q).copied().collect();
        if !s.contains(&zq) {
            return Err(format!("(z1, {q:?}) is outside S"));
        }
        if let Some(u) = first_unlit(&q, x2, &sigma_samples, sampling.segment_step) {
            return Err(format!("Sigma sample {u:?} is not lit from {q:?}"));
        }
    }
    Ok(())
}

/// Shrink `W_2` and grow a ball around `z_2` so that `Sigma` is lit from
/// every point of the ball. The erosion depth and radius are halved from
/// initial guesses until the sampled predicates hold; the radius is then
/// enlarged by bisection towards the largest admissible value.
pub fn construct_y2_x2<T: Real>(
    witness: &ConditionWitness<T>,
    s: &Region<T>,
    w2: &Region<T>,
    sigma: &Region<T>,
    sampling: &Sampling<T>,
) -> Result<(BallSpec<T>, Region<T>)> {
    let (Some(z1), Some(z2), true) = (&witness.z1, &witness.z2, witness.passed()) else {
        return Err(Error::precondition("Y2/X2 construction needs a passing witness"));
    };
    let min_radius = sampling.step;
    let sigma_samples = sigma.samples(sampling.step);
    let (lo, hi) = w2.bounds().ok_or_else(|| Error::Construction("W2 is empty".into()))?;
    let extent = lo.iter().zip(&hi).map(|(a, b)| *b - *a).fold(T::infinity(), T::min);

    let mut eps1 = extent * c(0.25);
    let x2_prime = loop {
        let cand = Region::eroded(w2.clone(), eps1);
        if !cand.samples(sampling.step).is_empty() && first_unlit(z2, &cand, &sigma_samples, sampling.segment_step).is_none()
        {
            break cand;
        }
        eps1 = eps1 * c(0.5);
        if eps1 < sampling.step * c(0.25) {
            return Err(Error::Construction(format!(
                "no erosion depth >= {} keeps Sigma lit from z2 = {z2:?}",
                sampling.step * c(0.25)
            )));
        }
    };

    let admissible = |r: T| -> std::result::Result<Region<T>, String> {
        let ball = BallSpec { center: z2.clone(), radius: r };
        let x2 = Region::difference(x2_prime.clone(), ball.region());
        verify_construction(z1, &ball, &x2, s, sigma, sampling).map(|_| x2)
    };

    let (slo, shi) = s.bounds().ok_or_else(|| Error::Construction("S is empty".into()))?;
    let n = z1.len();
    let mut r = (n..2 * n).map(|a| shi[a] - slo[a]).fold(T::zero(), T::max);
    if let Some(g) = sigma_samples.iter().map(|q| dist(q, z2)).reduce(T::min) {
        r = r.min(g);
    }
    let mut last_reason = String::new();
    let (mut good, mut x2) = loop {
        if r < min_radius {
            return Err(Error::Construction(format!(
                "no admissible Y2 radius >= {min_radius} around z2 = {z2:?}: {last_reason}"
            )));
        }
        match admissible(r) {
            Ok(x2) => break (r, x2),
            Err(e) => last_reason = e,
        }
        r = r * c(0.5);
    };
    let mut bad = good * c(2.0);
    for _ in 0..8 {
        let mid = (good + bad) * c(0.5);
        match admissible(mid) {
            Ok(x) => {
                good = mid;
                x2 = x;
            }
            Err(_) => bad = mid,
        }
    }
    Ok((BallSpec { center: z2.clone(), radius: good }, x2))
}
