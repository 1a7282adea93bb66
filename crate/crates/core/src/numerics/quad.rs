use std::ops::{Add, Mul, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::{c, Real};

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Clone, Copy, Debug)]
pub struct Quadrature<T, V = T> {
    pub value: V,
    pub error: T,
    pub evaluations: usize,
}

/// Values that can be integrated: reals and complex numbers.
pub trait Integrand<T: Real>: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<T, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> T;
}

impl<T: Real> Integrand<T> for T {
    fn zero() -> Self {
        T::zero()
    }

    fn magnitude(&self) -> T {
        self.abs()
    }
}

impl<T: Real> Integrand<T> for Complex<T> {
    fn zero() -> Self {
        Complex::new(T::zero(), T::zero())
    }

    fn magnitude(&self) -> T {
        self.norm()
    }
}

fn gk15<T: Real, V: Integrand<T>, F: FnMut(T) -> V>(f: &mut F, a: T, b: T) -> (V, T) {
    let half = (b - a) * c(0.5);
    let mid = (a + b) * c(0.5);
    let fc = f(mid);
    let mut kron = fc * c(WGK[7]);
    let mut gauss = fc * c(WG[3]);
    for j in 0..7 {
        let dx = half * c(XGK[j]);
        let s = f(mid - dx) + f(mid + dx);
        kron = kron + s * c(WGK[j]);
        if j % 2 == 1 {
            gauss = gauss + s * c(WG[j / 2]);
        }
    }
    (kron * half, ((kron - gauss) * half).magnitude())
}

/// Globally adaptive Gauss-Kronrod (7/15) integration of `f` over `[a, b]`.
///
/// Stops once the summed error estimate drops below
/// `max(abs_tol, rel_tol * |value|)`; fails with an accuracy error when the
/// interval budget is exhausted first.
pub fn integrate<T: Real, F: FnMut(T) -> T>(f: F, a: T, b: T, abs_tol: T, rel_tol: T) -> Result<Quadrature<T>> {
    integrate_values(f, a, b, abs_tol, rel_tol)
}

/// Complex-valued version of [`integrate`].
pub fn integrate_complex<T: Real, F: FnMut(T) -> Complex<T>>(
    f: F,
    a: T,
    b: T,
    abs_tol: T,
    rel_tol: T,
) -> Result<Quadrature<T, Complex<T>>> {
    integrate_values(f, a, b, abs_tol, rel_tol)
}

pub fn integrate_values<T: Real, V: Integrand<T>, F: FnMut(T) -> V>(
    f: F,
    a: T,
    b: T,
    abs_tol: T,
    rel_tol: T,
) -> Result<Quadrature<T, V>> {
    integrate_partition(f, &[a, b], abs_tol, rel_tol)
}

/// [`integrate`] over `[breaks[0], breaks[last]]` starting from the pieces
/// between consecutive (sorted) break points, so that kinks at the breaks
/// and features narrower than the whole interval are resolved.
pub fn integrate_partition<T: Real, V: Integrand<T>, F: FnMut(T) -> V>(
    mut f: F,
    breaks: &[T],
    abs_tol: T,
    rel_tol: T,
) -> Result<Quadrature<T, V>> {
    const MAX_INTERVALS: usize = 4000;
    let mut parts = Vec::with_capacity(breaks.len());
    for w in breaks.windows(2) {
        if w[1] > w[0] {
            let (v, e) = gk15(&mut f, w[0], w[1]);
            parts.push((w[0], w[1], v, e));
        }
    }
    if parts.is_empty() {
        return Ok(Quadrature { value: V::zero(), error: T::zero(), evaluations: 0 });
    }
    let (a, b) = (breaks[0], breaks[breaks.len() - 1]);
    let pieces = parts.len();
    let mut evaluations = 15 * pieces;
    let budget = MAX_INTERVALS + pieces;
    loop {
        let value = parts.iter().fold(V::zero(), |acc, p| acc + p.2);
        let error: T = parts.iter().map(|p| p.3).sum();
        if error <= abs_tol.max(rel_tol * value.magnitude()) {
            return Ok(Quadrature { value, error, evaluations });
        }
        if parts.len() >= budget {
            return Err(Error::accuracy(format!(
                "adaptive quadrature did not converge on [{a}, {b}]: error {error:e}"
            )));
        }
        let (idx, _) = parts
            .iter()
            .enumerate()
            .fold((0, T::neg_infinity()), |best, (i, p)| if p.3 > best.1 { (i, p.3) } else { best });
        let (lo, hi, _, _) = parts.swap_remove(idx);
        let mid = (lo + hi) * c(0.5);
        if mid <= lo || mid >= hi {
            return Err(Error::accuracy(format!("quadrature interval underflow near {mid}")));
        }
        let (vl, el) = gk15(&mut f, lo, mid);
        let (vr, er) = gk15(&mut f, mid, hi);
        evaluations += 30;
        parts.push((lo, mid, vl, el));
        parts.push((mid, hi, vr, er));
    }
}
