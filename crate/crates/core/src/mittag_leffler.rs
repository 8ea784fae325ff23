//! Two-parameter Mittag-Leffler function E_{α,β}(z) = Σ_k z^k / Γ(αk + β).
//!
//! For 0 < α ≤ 1 three evaluators are combined:
//! * the power series for |z| ≤ 1, summed with Neumaier compensation;
//! * the inverse-power asymptotic expansion for |z| ≥ 50 away from the
//!   growth sector, |arg z| > απ/2;
//! * otherwise, the inverse Laplace integral
//!   (1/2πi) ∫ e^s s^{α−β} / (s^α − z) ds on a parabolic Hankel contour
//!   s = μ(1+iu)², discretised by the trapezoidal rule, plus the residue at
//!   s* = z^{1/α} when that pole lies to the right of the contour.
//!
//! For α > 1 only the series is used and inputs where cancellation would
//! cost more than about four digits are rejected.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::special::recip_gamma;

const SERIES_RADIUS: f64 = 1.0;
const ASYMPTOTIC_RADIUS: f64 = 50.0;
const MAX_TERMS: usize = 4000;
/// Default contour parameter and trapezoid settings.
const MU: f64 = 4.0;
const STEP: f64 = 0.04;
const DECAY: f64 = 40.0;
/// Largest Σ|term| / |sum| accepted from the series when α > 1.
const MAX_SERIES_LOSS: f64 = 1e4;

#[derive(Debug, Clone, Copy, Default)]
struct Neumaier {
    sum: f64,
    comp: f64,
}

impl Neumaier {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// E_{α,β}(z) for α > 0, β > 0.
pub fn mittag_leffler(alpha: f64, beta: f64, z: Complex64) -> Result<Complex64> {
    if !(alpha > 0.0 && alpha.is_finite() && beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!(
            "Mittag-Leffler parameters must be positive, got alpha = {alpha}, beta = {beta}"
        )));
    }
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite argument {z}")));
    }
    if z == Complex64::new(0.0, 0.0) {
        return Ok(Complex64::new(recip_gamma(beta), 0.0));
    }
    let r = z.norm();
    if alpha > 1.0 {
        return series(alpha, beta, z, true);
    }
    if r <= SERIES_RADIUS {
        return series(alpha, beta, z, false);
    }
    if r >= ASYMPTOTIC_RADIUS && z.arg().abs() > alpha * PI / 2.0 {
        return Ok(asymptotic(alpha, beta, z));
    }
    Ok(contour(alpha, beta, z))
}

/// E_α(x) = E_{α,1}(x) for real x.
pub fn mittag_leffler_real(alpha: f64, x: f64) -> Result<f64> {
    Ok(mittag_leffler(alpha, 1.0, Complex64::new(x, 0.0))?.re)
}

fn series(alpha: f64, beta: f64, z: Complex64, check_loss: bool) -> Result<Complex64> {
    let (mut re, mut im) = (Neumaier::default(), Neumaier::default());
    let mut magnitude = 0.0;
    let (ln_r, theta) = (z.norm().ln(), z.arg());
    let mut power = Complex64::new(1.0, 0.0);
    let mut converged = false;
    for k in 0..MAX_TERMS {
        let x = alpha * k as f64 + beta;
        let term = if power.norm() < 1e250 {
            let t = power * recip_gamma(x);
            power *= z;
            t
        } else {
            // z^k / Γ(x) with both factors possibly out of range.
            let m = (k as f64 * ln_r - crate::special::ln_gamma(x)).exp();
            Complex64::from_polar(m, k as f64 * theta)
        };
        re.add(term.re);
        im.add(term.im);
        let t = term.norm();
        magnitude += t;
        let ratio = z.norm() / (alpha * (k + 1) as f64 + beta).powf(alpha);
        let total = Complex64::new(re.value(), im.value()).norm();
        if k > 0 && ratio < 0.5 && t <= 1e-18 * total.max(f64::MIN_POSITIVE) {
            converged = true;
            break;
        }
    }
    let sum = Complex64::new(re.value(), im.value());
    if !converged {
        return Err(Error::AccuracyDomain(format!(
            "series for E_({alpha},{beta})({z}) did not converge in {MAX_TERMS} terms"
        )));
    }
    if check_loss && magnitude > MAX_SERIES_LOSS * sum.norm() {
        return Err(Error::AccuracyDomain(format!(
            "series for E_({alpha},{beta})({z}) loses {:.1} digits to cancellation",
            (magnitude / sum.norm()).log10()
        )));
    }
    Ok(sum)
}

/// −Σ_{k≥1} z^{−k}/Γ(β−αk), truncated at the smallest term, plus the
/// exponential contribution when |arg z| < απ.
fn asymptotic(alpha: f64, beta: f64, z: Complex64) -> Complex64 {
    let inv = z.inv();
    let mut power = inv;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut previous = f64::INFINITY;
    for k in 1..MAX_TERMS {
        let term = power * recip_gamma(beta - alpha * k as f64);
        let t = term.norm();
        if t > previous && t > 0.0 {
            break;
        }
        sum -= term;
        if t <= 1e-18 * sum.norm() && t != 0.0 {
            break;
        }
        if t != 0.0 {
            previous = t;
        }
        power *= inv;
    }
    if z.arg().abs() < alpha * PI {
        sum += pole_residue(alpha, beta, z);
    }
    sum
}

/// (1/α) e^{s*} s*^{1−β} with s* = z^{1/α}.
fn pole_residue(alpha: f64, beta: f64, z: Complex64) -> Complex64 {
    let pole = z.powf(1.0 / alpha);
    pole.exp() * pole.powf(1.0 - beta) / alpha
}

fn contour(alpha: f64, beta: f64, z: Complex64) -> Complex64 {
    let mut mu = MU;
    let mut total = Complex64::new(0.0, 0.0);
    if z.arg().abs() < alpha * PI {
        let pole = z.powf(1.0 / alpha);
        let rho = pole.sqrt().re;
        if rho > 0.5 * MU.sqrt() {
            if rho < 2.0 * MU.sqrt() {
                mu = (rho / 2.0).powi(2);
            }
            total += pole_residue(alpha, beta, z);
        }
    }
    // s = μ(1+iu)², so ds/(2πi) = (μ/π)(1+iu) du.
    let extent = (1.0 + DECAY / mu).sqrt();
    let nodes = (extent / STEP).ceil() as usize;
    let integrand = |u: f64| {
        let w = Complex64::new(1.0, u);
        let s = mu * w * w;
        let sa = s.powf(alpha);
        s.exp() * s.powf(alpha - beta) / (sa - z) * w
    };
    let mut acc = integrand(0.0);
    for j in 1..=nodes {
        let u = j as f64 * STEP;
        acc += integrand(u) + integrand(-u);
    }
    total + acc * (mu * STEP / PI)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn value_at_zero() {
        assert_eq!(mittag_leffler(0.5, 1.0, c(0.0, 0.0)).unwrap(), c(1.0, 0.0));
        let v = mittag_leffler(0.5, 2.0, c(0.0, 0.0)).unwrap();
        assert!((v.re - 1.0).abs() < 1e-15);
    }

    #[test]
    fn exponential_through_every_route() {
        for z in [c(0.3, -0.4), c(-7.0, 2.0), c(4.0, 3.0), c(-60.0, 5.0), c(-3.0, 0.0)] {
            let got = mittag_leffler(1.0, 1.0, z).unwrap();
            let expect = z.exp();
            assert!((got - expect).norm() <= 1e-13 * expect.norm().max(1.0), "z = {z}: {got} vs {expect}");
        }
    }

    #[test]
    fn series_and_contour_agree_on_the_unit_circle() {
        for alpha in [0.2, 0.5, 0.8] {
            for k in 0..12 {
                let z = Complex64::from_polar(1.0, k as f64 * PI / 6.0);
                let a = series(alpha, 1.0, z, false).unwrap();
                let b = contour(alpha, 1.0, z);
                assert!((a - b).norm() < 1e-13, "alpha = {alpha}, z = {z}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn contour_and_asymptotic_agree_near_the_switch() {
        for alpha in [0.3, 0.6, 0.9] {
            for z in [c(-50.0, 0.0), c(-30.0, 40.0), c(-40.0, -30.0)] {
                let a = asymptotic(alpha, 1.0, z);
                let b = contour(alpha, 1.0, z);
                assert!((a - b).norm() < 1e-13, "alpha = {alpha}, z = {z}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn rejects_bad_input() {
        assert!(matches!(mittag_leffler(0.0, 1.0, c(1.0, 0.0)), Err(Error::Domain(_))));
        assert!(matches!(mittag_leffler(0.5, -1.0, c(1.0, 0.0)), Err(Error::Domain(_))));
        // cos-like oscillation with huge cancellation
        assert!(matches!(
            mittag_leffler(2.0, 1.0, c(-2500.0, 0.0)),
            Err(Error::AccuracyDomain(_))
        ));
    }
}
