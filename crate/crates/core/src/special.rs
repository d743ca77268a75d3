//! Special functions. Evaluated in `f64` and cast back to the caller's scalar.

use statrs::distribution::{ChiSquared, ContinuousCDF, Normal, StudentsT};
use statrs::function::{erf, gamma};

use crate::Real;

/// Standard normal CDF.
pub(crate) fn std_normal_cdf<T: Real>(z: T) -> T {
    let z = z.to_f64_lossy();
    T::lit(0.5 * erf::erfc(-z / std::f64::consts::SQRT_2))
}

pub(crate) fn std_normal_quantile(p: f64) -> f64 {
    Normal::standard().inverse_cdf(p)
}

pub(crate) fn students_t_quantile(p: f64, dof: f64) -> f64 {
    StudentsT::new(0.0, 1.0, dof)
        .map(|d| d.inverse_cdf(p))
        .unwrap_or_else(|_| std_normal_quantile(p))
}

pub(crate) fn chi_squared_quantile(p: f64, dof: f64) -> f64 {
    ChiSquared::new(dof)
        .map(|d| d.inverse_cdf(p))
        .unwrap_or(f64::NAN)
}

pub(crate) fn digamma<T: Real>(x: T) -> T {
    T::lit(gamma::digamma(x.to_f64_lossy()))
}

/// Regularized lower incomplete gamma function P(a, x).
pub(crate) fn gamma_p<T: Real>(a: T, x: T) -> T {
    if x <= T::zero() {
        return T::zero();
    }
    T::lit(gamma::gamma_lr(a.to_f64_lossy(), x.to_f64_lossy()))
}

pub(crate) fn ln_gamma<T: Real>(x: T) -> T {
    T::lit(gamma::ln_gamma(x.to_f64_lossy()))
}

/// Trigamma via upward recurrence to x >= 12 and the asymptotic series.
pub(crate) fn trigamma<T: Real>(x: T) -> T {
    let mut x = x.to_f64_lossy();
    let mut acc = 0.0;
    while x < 12.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    // 1/x + 1/2x^2 + 1/6x^3 - 1/30x^5 + 1/42x^7 - 1/30x^9
    let tail = inv
        + 0.5 * inv2
        + inv * inv2 * (1.0 / 6.0 - inv2 * (1.0 / 30.0 - inv2 * (1.0 / 42.0 - inv2 / 30.0)));
    T::lit(acc + tail)
}
