use crate::scalar::{c, Real};

/// C-infinity step: 0 for `x <= 0`, 1 for `x >= 1`.
pub fn smooth_step<T: Real>(x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    if x >= T::one() {
        return T::one();
    }
    let psi = |y: T| if y > T::zero() { (-T::one() / y).exp() } else { T::zero() };
    let a = psi(x);
    let b = psi(T::one() - x);
    a / (a + b)
}

/// Standard compactly supported bump `exp(1 - 1/(1 - u^2))` for `|u| < 1`,
/// with peak value 1 at `u = 0`.
pub fn bump<T: Real>(u: T) -> T {
    let u2 = u * u;
    if u2 >= T::one() {
        T::zero()
    } else {
        (T::one() - T::one() / (T::one() - u2)).exp()
    }
}

/// `int_{-1}^{1} bump(u) du`.
pub fn bump_integral<T: Real>() -> T {
    c(1.206_900_322_437_876_2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::integrate;

    #[test]
    fn bump_integral_constant() {
        let q = integrate(|u: f64| bump(u), -1.0, 1.0, 1e-15, 1e-15).unwrap();
        assert!((q.value - bump_integral::<f64>()).abs() < 1e-13, "{}", q.value);
    }

    #[test]
    fn smooth_step_limits() {
        assert_eq!(smooth_step(-0.5f64), 0.0);
        assert_eq!(smooth_step(1.5f64), 1.0);
        assert!((smooth_step(0.5f64) - 0.5).abs() < 1e-15);
        assert!(smooth_step(0.2f64) < smooth_step(0.3f64));
    }
}
