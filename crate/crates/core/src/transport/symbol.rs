use num_complex::Complex;
use serde::{Deserialize, Serialize};

use super::probe::ProbeSymbol;
use crate::error::{Error, Result};
use crate::numerics::{integrate, integrate_partition};
use crate::phantom::{line_breaks, DensityModel};
use crate::scalar::{c, Real};

const QUAD_REL: f64 = 1e-12;

/// Two straight rays leaving `(y1, y2)` with unit directions `k1`, `k2`
/// and radial frequencies `s1`, `s2`, observed up to time `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayPair<T> {
    pub y1: Vec<T>,
    pub y2: Vec<T>,
    pub k1: Vec<T>,
    pub k2: Vec<T>,
    pub s1: T,
    pub s2: T,
    pub t: T,
}

/// Point `(t, x1, x2, tau, xi1, xi2)` of the cotangent bundle.
#[derive(Clone, Debug, PartialEq)]
pub struct PhasePoint<T> {
    pub time: T,
    pub x1: Vec<T>,
    pub x2: Vec<T>,
    pub tau: T,
    pub xi1: Vec<T>,
    pub xi2: Vec<T>,
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|x| *x * *x).sum::<T>().sqrt()
}

impl<T: Real> RayPair<T> {
    pub fn new(y1: Vec<T>, y2: Vec<T>, k1: Vec<T>, k2: Vec<T>, s1: T, s2: T, t: T) -> Self {
        RayPair { y1, y2, k1, k2, s1, s2, t }
    }

    pub fn validate(&self, eps: T) -> Result<()> {
        let n = self.y1.len();
        if [self.y2.len(), self.k1.len(), self.k2.len()].iter().any(|&m| m != n) {
            return Err(Error::validation("ray pair components have different dimensions"));
        }
        for k in [&self.k1, &self.k2] {
            if (norm(k) - T::one()).abs() > c(1e-12) {
                return Err(Error::validation(format!("ray direction {k:?} is not a unit vector")));
            }
        }
        if !(self.s1 > eps && self.s2 > eps) {
            return Err(Error::precondition(format!(
                "ray frequencies ({}, {}) must exceed eps = {eps}",
                self.s1, self.s2
            )));
        }
        if self.k1 == self.k2 {
            return Err(Error::precondition("degenerate ray pair with equal directions"));
        }
        if !(self.t >= T::zero()) {
            return Err(Error::validation("ray time must be >= 0"));
        }
        Ok(())
    }

    pub fn x1(&self, s: T) -> Vec<T> {
        self.y1.iter().zip(&self.k1).map(|(y, k)| *y + *k * s).collect()
    }

    pub fn x2(&self, s: T) -> Vec<T> {
        self.y2.iter().zip(&self.k2).map(|(y, k)| *y + *k * s).collect()
    }
}

/// Straight-line Hamilton flow of `tau - |xi1| - |xi2|` from the vertex;
/// `xi_k = -s_k k_k` and `tau = s1 + s2`.
pub fn bicharacteristic<T: Real>(ray: &RayPair<T>, s: T) -> PhasePoint<T> {
    PhasePoint {
        time: s,
        x1: ray.x1(s),
        x2: ray.x2(s),
        tau: ray.s1 + ray.s2,
        xi1: ray.k1.iter().map(|k| -ray.s1 * *k).collect(),
        xi2: ray.k2.iter().map(|k| -ray.s2 * *k).collect(),
    }
}

impl<T: Real> PhasePoint<T> {
    /// `tau - |xi1| - |xi2|`, zero on the characteristic set.
    pub fn characteristic_defect(&self) -> T {
        self.tau - norm(&self.xi1) - norm(&self.xi2)
    }
}

/// Half-density normalization `V(t) = scale * exp(rate * t)` along the
/// flow. Only `V(t)/V(s)` ever enters, so `scale` drops out exactly.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VConvention<T> {
    pub scale: T,
    pub rate: T,
}

impl<T: Real> Default for VConvention<T> {
    fn default() -> Self {
        VConvention { scale: T::one(), rate: T::zero() }
    }
}

impl<T: Real> VConvention<T> {
    pub fn value(&self, t: T) -> T {
        self.scale * (self.rate * t).exp()
    }

    /// `V(t) / V(s)`.
    pub fn propagator(&self, s: T, t: T) -> T {
        (self.rate * (t - s)).exp()
    }
}

fn abs_tol<T: Real>(scale: T) -> T {
    scale.abs().max(T::min_positive_value()) * c(1e-15)
}

/// `A V(t) int_0^t mu(s)/V(s) ds` with `A = (Theta(k1)+Theta(k2)) nu(s1) nu(s2)`.
pub fn incident_symbol<T: Real>(probe: &ProbeSymbol<T>, ray: &RayPair<T>, t: T, v: &VConvention<T>) -> Result<Complex<T>> {
    let amp = probe.amplitude(&ray.k1, &ray.k2, ray.s1, ray.s2);
    Ok(Complex::new(amp * window_integral(probe, t, v)?, T::zero()))
}

fn window_integral<T: Real>(probe: &ProbeSymbol<T>, t: T, v: &VConvention<T>) -> Result<T> {
    let (a, b) = (probe.eps, probe.eps * c(2.0));
    if t <= a {
        return Ok(T::zero());
    }
    let q = integrate(|s| v.propagator(s, t) * probe.mu(s), a, t.min(b), abs_tol(T::one()), c(QUAD_REL))?;
    Ok(q.value)
}

fn ray_breaks<T: Real, M: DensityModel<T> + ?Sized>(rho: &M, ray: &RayPair<T>, s0: T, s1: T) -> Vec<T> {
    line_breaks(rho, &[(&ray.y1, &ray.k1), (&ray.y2, &ray.k2)], s0, s1)
}

/// `g^2 (rho(x1(s))/s1 + rho(x2(s))/s2)`; the scattering term carries it
/// with a minus sign.
pub fn sigma_q<T: Real, M: DensityModel<T> + ?Sized>(rho: &M, g: T, ray: &RayPair<T>, s: T, eps: T) -> Result<T> {
    if !(ray.s1 > eps && ray.s2 > eps) {
        return Err(Error::precondition(format!("frequencies ({}, {}) below eps = {eps}", ray.s1, ray.s2)));
    }
    Ok(g * g * (rho.density(&ray.x1(s)) / ray.s1 + rho.density(&ray.x2(s)) / ray.s2))
}

/// Scattered principal symbol by nested quadrature:
/// `-V(t) int_0^t sigma_Q(s) sigma_in(s) / V(s) ds`.
pub fn scattered_symbol<T: Real, M: DensityModel<T> + ?Sized>(
    rho: &M,
    g: T,
    probe: &ProbeSymbol<T>,
    ray: &RayPair<T>,
    t: T,
    v: &VConvention<T>,
) -> Result<Complex<T>> {
    ray.validate(probe.eps)?;
    let amp = probe.amplitude(&ray.k1, &ray.k2, ray.s1, ray.s2);
    let (a, b) = (probe.eps, probe.eps * c(2.0));
    if t <= a || amp == T::zero() {
        return Ok(Complex::new(T::zero(), T::zero()));
    }
    let mut err = None;
    let mut outer = |s: T| -> T {
        let inner = match window_integral(probe, s, v) {
            Ok(x) => x,
            Err(e) => {
                err.get_or_insert(e);
                T::zero()
            }
        };
        let q = g * g * (rho.density(&ray.x1(s)) / ray.s1 + rho.density(&ray.x2(s)) / ray.s2);
        -v.propagator(s, t) * q * inner
    };
    let scale = g * g * amp / ray.s1.min(ray.s2);
    let mut total = integrate(&mut outer, a, t.min(b), abs_tol(scale), c(QUAD_REL))?.value;
    if t > b {
        total += integrate_partition(&mut outer, &ray_breaks(rho, ray, b, t), abs_tol(scale), c(QUAD_REL))?.value;
    }
    if let Some(e) = err {
        return Err(e);
    }
    Ok(Complex::new(amp * total, T::zero()))
}

/// `-g^2 int_0^t (rho(x1(s))/s1 + rho(x2(s))/s2) ds`, the scattered to
/// incident ratio when `rho` vanishes near the vertex during the source
/// window.
pub fn line_ratio<T: Real, M: DensityModel<T> + ?Sized>(rho: &M, g: T, ray: &RayPair<T>, t: T) -> Result<T> {
    let f = |s: T| rho.density(&ray.x1(s)) / ray.s1 + rho.density(&ray.x2(s)) / ray.s2;
    let q = integrate_partition(f, &ray_breaks(rho, ray, T::zero(), t), abs_tol(T::one() / ray.s1.min(ray.s2)), c(1e-14))?;
    Ok(-g * g * q.value)
}

/// Scattered over incident symbol at the ray time.
pub fn scattered_ratio<T: Real, M: DensityModel<T> + ?Sized>(
    rho: &M,
    g: T,
    probe: &ProbeSymbol<T>,
    ray: &RayPair<T>,
    v: &VConvention<T>,
) -> Result<Complex<T>> {
    let inc = incident_symbol(probe, ray, ray.t, v)?;
    if inc.norm() == T::zero() {
        return Err(Error::precondition("incident symbol vanishes; ratio undefined"));
    }
    Ok(scattered_symbol(rho, g, probe, ray, ray.t, v)? / inc)
}

type State<T, const N: usize> = [Complex<T>; N];

fn rk4<T: Real, const N: usize, F: FnMut(T, &State<T, N>) -> State<T, N>>(f: &mut F, s: T, y: &State<T, N>, h: T) -> State<T, N> {
    let add = |y: &State<T, N>, k: &State<T, N>, w: T| -> State<T, N> { std::array::from_fn(|i| y[i] + k[i] * w) };
    let half = h * c(0.5);
    let k1 = f(s, y);
    let k2 = f(s + half, &add(y, &k1, half));
    let k3 = f(s + half, &add(y, &k2, half));
    let k4 = f(s + h, &add(y, &k3, h));
    std::array::from_fn(|i| y[i] + (k1[i] + k2[i] * c::<T>(2.0) + k3[i] * c::<T>(2.0) + k4[i]) * (h / c::<T>(6.0)))
}

/// Adaptive classical RK4 with step doubling and local extrapolation.
fn integrate_ode<T: Real, const N: usize, F: FnMut(T, &State<T, N>) -> State<T, N>>(
    mut f: F,
    y0: State<T, N>,
    s0: T,
    s1: T,
    atol: T,
    rtol: T,
    breaks: &[T],
) -> Result<State<T, N>> {
    let mut y = y0;
    let mut s = s0;
    let span = s1 - s0;
    if span <= T::zero() {
        return Ok(y);
    }
    let h_max = span / c(64.0);
    let mut h = h_max;
    let mut next = breaks.iter().copied().filter(|b| *b > s0 && *b < s1).chain(std::iter::once(s1)).peekable();
    let h_min = span * c(1e-13);
    while s < s1 {
        while next.peek().is_some_and(|b| *b <= s) {
            next.next();
        }
        let target = next.peek().copied().unwrap_or(s1);
        h = h.min(target - s);
        let full = rk4(&mut f, s, &y, h);
        let mid = rk4(&mut f, s, &y, h * c(0.5));
        let fine = rk4(&mut f, s + h * c(0.5), &mid, h * c(0.5));
        let mut err = T::zero();
        for i in 0..N {
            let tol = atol + rtol * fine[i].norm();
            err = err.max((fine[i] - full[i]).norm() / tol);
        }
        if err <= T::one() {
            s += h;
            y = std::array::from_fn(|i| fine[i] + (fine[i] - full[i]) / c::<T>(15.0));
            let grow = if err == T::zero() { c(2.0) } else { (c::<T>(0.9) * err.powf(c(-0.2))).min(c(2.0)) };
            h = (h * grow).min(h_max);
        } else {
            h = h * (c::<T>(0.9) * err.powf(c::<T>(-0.2))).max(c::<T>(0.1));
            if h < h_min {
                return Err(Error::accuracy(format!("transport ODE step underflow at s = {s}")));
            }
        }
    }
    Ok(y)
}

/// Solve `a' = (V'/V) a + i r(s)`, `a(0) = 0`, up to `t`.
pub fn integrate_transport<T: Real, R: FnMut(T) -> Complex<T>>(
    v: &VConvention<T>,
    t: T,
    mut rhs: R,
    tol: T,
) -> Result<Complex<T>> {
    let i = Complex::new(T::zero(), T::one());
    let y = integrate_ode(
        |s, y: &State<T, 1>| [y[0] * v.rate + i * rhs(s)],
        [Complex::new(T::zero(), T::zero())],
        T::zero(),
        t,
        tol * c(1e-3),
        tol,
        &[],
    )?;
    Ok(y[0])
}

/// The scattered symbol from the transport equation
/// `i^-1 L_H a = sigma[Q] sigma_in` along the bicharacteristic, with the
/// incident symbol integrated alongside from its own transport equation.
pub fn transport_ode_solve<T: Real, M: DensityModel<T> + ?Sized>(
    rho: &M,
    g: T,
    probe: &ProbeSymbol<T>,
    ray: &RayPair<T>,
    t: T,
    v: &VConvention<T>,
) -> Result<Complex<T>> {
    ray.validate(probe.eps)?;
    let amp = probe.amplitude(&ray.k1, &ray.k2, ray.s1, ray.s2);
    if t <= probe.eps || amp == T::zero() {
        return Ok(Complex::new(T::zero(), T::zero()));
    }
    let i = Complex::new(T::zero(), T::one());
    let zero = Complex::new(T::zero(), T::zero());
    let g2 = g * g;
    let y = integrate_ode(
        |s, y: &State<T, 2>| {
            let q = g2 * (rho.density(&ray.x1(s)) / ray.s1 + rho.density(&ray.x2(s)) / ray.s2);
            // sigma[Q] sigma_in enters as i * (i q b) = -q b
            let forcing = i * q * y[0];
            [y[0] * v.rate + Complex::new(amp * probe.mu(s), T::zero()), y[1] * v.rate + i * forcing]
        },
        [zero, zero],
        probe.eps,
        t,
        abs_tol(amp) * c(10.0),
        c(1e-11),
        &ray_breaks(rho, ray, probe.eps, t),
    )?;
    Ok(y[1])
}
