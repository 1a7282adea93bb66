use num_complex::Complex;

use crate::error::{Error, Result};
use crate::numerics::{integrate, integrate_complex};
use crate::scalar::{c, Real};

/// Quadrature rule on the unit sphere `S^{n-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DirectionQuadrature<T> {
    pub nodes: Vec<Vec<T>>,
    pub weights: Vec<T>,
}

impl<T: Real> DirectionQuadrature<T> {
    /// `m` equally spaced directions on the circle (exact for trigonometric
    /// polynomials of degree < m).
    pub fn circle(m: usize) -> Self {
        let w = T::TAU() / T::from_usize_lossy(m);
        let nodes = (0..m)
            .map(|j| {
                let a = w * T::from_usize_lossy(j);
                vec![a.cos(), a.sin()]
            })
            .collect();
        DirectionQuadrature { nodes, weights: vec![w; m] }
    }

    /// Unit point mass at `omega`.
    pub fn delta(omega: Vec<T>) -> Self {
        DirectionQuadrature { nodes: vec![omega], weights: vec![T::one()] }
    }

    /// Gauss-Legendre in `cos(theta)` times uniform `phi` on `S^2`.
    pub fn sphere(m_theta: usize, m_phi: usize) -> Self {
        let (xs, ws) = gauss_legendre::<T>(m_theta);
        let dphi = T::TAU() / T::from_usize_lossy(m_phi);
        let mut nodes = Vec::new();
        let mut weights = Vec::new();
        for (x, w) in xs.iter().zip(&ws) {
            let r = (T::one() - *x * *x).sqrt();
            for j in 0..m_phi {
                let p = dphi * T::from_usize_lossy(j);
                nodes.push(vec![r * p.cos(), r * p.sin(), *x]);
                weights.push(*w * dphi);
            }
        }
        DirectionQuadrature { nodes, weights }
    }

    pub fn total_weight(&self) -> T {
        self.weights.iter().copied().sum()
    }
}

/// Nodes and weights of the `m`-point Gauss-Legendre rule on `[-1, 1]`.
fn gauss_legendre<T: Real>(m: usize) -> (Vec<T>, Vec<T>) {
    let mut xs = Vec::with_capacity(m);
    let mut ws = Vec::with_capacity(m);
    for i in 0..m {
        let mut x: f64 = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if m == 0 { 1.0 } else if m == 1 { x } else { p1 };
            let pm1 = if m == 1 { 1.0 } else { p0 };
            dp = m as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        xs.push(c(x));
        ws.push(c(2.0 / ((1.0 - x * x) * dp * dp)));
    }
    (xs, ws)
}

/// `F^{-1} eta(sigma) = int e^{i sigma r} eta(r) dr` over the support `[a, b]`
/// of `eta` (no `2 pi` factor).
pub fn inverse_fourier_eta<T: Real, E: Fn(T) -> T>(eta: E, support: (T, T), sigma: T) -> Result<Complex<T>> {
    let scale = eta_scale(&eta, support)?;
    fourier_eta(&eta, support, sigma, scale)
}

/// `int |eta|`, the natural size of `F^{-1} eta`.
fn eta_scale<T: Real, E: Fn(T) -> T>(eta: &E, support: (T, T)) -> Result<T> {
    Ok(integrate(|r| eta(r).abs(), support.0, support.1, c(1e-300), c(1e-10))?.value)
}

fn fourier_eta<T: Real, E: Fn(T) -> T>(eta: &E, support: (T, T), sigma: T, scale: T) -> Result<Complex<T>> {
    Ok(integrate_complex(
        |r| Complex::from_polar(eta(r), sigma * r),
        support.0,
        support.1,
        scale * c(1e-14),
        c(1e-12),
    )?
    .value)
}

/// Panel width of the `sigma2` integration.
const PANEL: f64 = 4.0;
/// Decay level of `F^{-1} eta` at which the `sigma2` integral is cut.
const DECAY: f64 = 1e-12;
/// Largest acceptable tail estimate.
const TAIL_TOL: f64 = 1e-6;

/// Principal symbol of the pairing `m(u, v)`:
///
/// `sum_j w_j conj(v(omega_j)) int_{sigma > eps} e^{-i sigma t} F^{-1} eta(sigma, omega_j) symbol(sigma, omega_j) d sigma`
///
/// where `eta(r, omega) = r chi(vertex + r omega)` is supported in
/// `r in support` and `symbol` is `sigma[u](t, omega1, omega; sigma1, sigma)`
/// at fixed `(t, omega1, sigma1)`.
#[allow(clippy::too_many_arguments)]
pub fn conormal_pairing_symbol<T, S, V, E>(
    symbol: S,
    v_on_rays: V,
    eta: E,
    support: (T, T),
    t: T,
    directions: &DirectionQuadrature<T>,
    eps: T,
    sigma_max: T,
) -> Result<Complex<T>>
where
    T: Real,
    S: Fn(T, &[T]) -> Complex<T>,
    V: Fn(&[T]) -> Complex<T>,
    E: Fn(T, &[T]) -> T,
{
    let mut total = Complex::new(T::zero(), T::zero());
    for (omega, w) in directions.nodes.iter().zip(&directions.weights) {
        let v = v_on_rays(omega);
        if v == Complex::new(T::zero(), T::zero()) {
            continue;
        }
        let eta_w = |r: T| eta(r, omega);
        let eta_scale = eta_scale(&eta_w, support)?.max(T::min_positive_value());
        let fe = |s: T| fourier_eta(&eta_w, support, s, eta_scale);
        let mut acc = Complex::new(T::zero(), T::zero());
        let mut lo = eps;
        let mut quiet = 0;
        while quiet < 2 {
            if lo >= sigma_max {
                let tail = fe(lo)?.norm() * symbol(lo, omega).norm() * c(PANEL);
                if tail > c(TAIL_TOL) {
                    return Err(Error::accuracy(format!(
                        "sigma2 integral not converged at {sigma_max}: tail estimate {tail:e}"
                    )));
                }
                break;
            }
            let hi = (lo + c(PANEL)).min(sigma_max);
            let mut failure = None;
            let panel = integrate_complex(
                |s| match fe(s) {
                    Ok(z) => Complex::from_polar(T::one(), -s * t) * z * symbol(s, omega),
                    Err(e) => {
                        failure.get_or_insert(e);
                        Complex::new(T::zero(), T::zero())
                    }
                },
                lo,
                hi,
                c(1e-16),
                c(1e-11),
            )?;
            if let Some(e) = failure {
                return Err(e);
            }
            acc += panel.value;
            lo = hi;
            let edge = fe(lo)?.norm();
            let decayed = edge < eta_scale * c(DECAY);
            let negligible = edge * symbol(lo, omega).norm() * c(PANEL) < c::<T>(DECAY) * acc.norm();
            quiet = if decayed || negligible { quiet + 1 } else { 0 };
        }
        total += acc * v.conj() * *w;
    }
    Ok(total)
}

/// Outcome of the nonvanishing check for
/// `int e^{-i sigma T} F^{-1} eta(sigma) nu(sigma) phi(sigma) / (-sigma) d sigma`.
#[derive(Clone, Copy, Debug)]
pub struct RepairCheck<T> {
    pub value: Complex<T>,
    pub nonvanishing: bool,
}

/// Evaluate the factor that multiplies the line integral in the pairing
/// symbol and report whether it is safely away from zero.  `phi` is an
/// optional extra frequency profile used to repair a vanishing factor.
#[allow(clippy::too_many_arguments)]
pub fn repair_factor<T, E, N, P>(
    eta: E,
    support: (T, T),
    nu: N,
    phi: Option<P>,
    big_t: T,
    eps: T,
    sigma_max: T,
    threshold: T,
) -> Result<RepairCheck<T>>
where
    T: Real,
    E: Fn(T) -> T,
    N: Fn(T) -> T,
    P: Fn(T) -> T,
{
    let symbol = |s: T, _: &[T]| {
        let p = phi.as_ref().map_or(T::one(), |f| f(s));
        Complex::new(-nu(s) * p / s, T::zero())
    };
    let value = conormal_pairing_symbol(
        symbol,
        |_| Complex::new(T::one(), T::zero()),
        |r, _| eta(r),
        support,
        big_t,
        &DirectionQuadrature::delta(vec![T::one()]),
        eps,
        sigma_max,
    )?;
    Ok(RepairCheck { value, nonvanishing: value.norm() > threshold })
}
