//! Gamma-function helpers.
//!
//! `gamma` and `ln_gamma` delegate to `libm`. Its `tgamma` is within about
//! 4.4e-16 relative error on the positive integers up to the overflow
//! threshold near 171.6.

use std::f64::consts::PI;

/// Γ(x) for real `x`. Returns ±inf at the poles and overflows past ~171.62.
#[inline]
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// ln|Γ(x)|.
#[inline]
pub fn ln_gamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// 1/Γ(x), finite everywhere: zero at the non-positive integers and
/// computed through the reflection formula for negative arguments.
pub fn recip_gamma(x: f64) -> f64 {
    if x <= 0.0 && x == x.floor() {
        return 0.0;
    }
    if x < 0.5 {
        // 1/Γ(x) = sin(πx) Γ(1-x) / π
        let s = sin_pi(x);
        return s * gamma(1.0 - x) / PI;
    }
    if x > 171.0 {
        return (-ln_gamma(x)).exp();
    }
    1.0 / gamma(x)
}

/// sin(πx) with exact zeros at the integers.
fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (0.5 * x).round();
    if r == 0.0 || r.abs() == 1.0 {
        return 0.0;
    }
    (PI * r).sin()
}
