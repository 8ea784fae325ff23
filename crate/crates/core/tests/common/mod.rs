//! Brute-force oracles shared by the integration tests.
#![allow(dead_code, clippy::excessive_precision)]

use fhbvm::special::gamma;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];
const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];
const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// G7/K15 pair on [a, b] for a vector integrand: (Kronrod, max|K − G|, ∫|f| estimate).
fn gk15<F: Fn(f64) -> Vec<f64>>(f: &F, a: f64, b: f64) -> (Vec<f64>, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k: Vec<f64> = fc.iter().map(|v| v * WGK[7]).collect();
    let mut g: Vec<f64> = fc.iter().map(|v| v * WG[3]).collect();
    let mut abs = fc.iter().fold(0.0f64, |m, v| m.max(v.abs())) * WGK[7];
    for j in 0..7 {
        let x = h * XGK[j];
        let (f1, f2) = (f(c - x), f(c + x));
        let mut peak = 0.0f64;
        for i in 0..k.len() {
            let sum = f1[i] + f2[i];
            k[i] += WGK[j] * sum;
            if j % 2 == 1 {
                g[i] += WG[j / 2] * sum;
            }
            peak = peak.max(f1[i].abs() + f2[i].abs());
        }
        abs += WGK[j] * peak;
    }
    let err = k.iter().zip(&g).fold(0.0f64, |m, (a, b)| m.max(((a - b) * h).abs()));
    k.iter_mut().for_each(|v| *v *= h);
    (k, err, abs * h.abs())
}

/// Adaptive Gauss–Kronrod quadrature of a vector integrand; the tolerance
/// is relative to the largest component.
pub fn integrate_vec<F: Fn(f64) -> Vec<f64>>(f: F, a: f64, b: f64, rel_tol: f64) -> Vec<f64> {
    let (whole, _, scale) = gk15(&f, a, b);
    if a == b {
        return vec![0.0; whole.len()];
    }
    let peak = whole.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let target = rel_tol * scale.max(peak).max(f64::MIN_POSITIVE);
    let mut stack = vec![(a, b, 0u32)];
    let mut total = vec![0.0; whole.len()];
    let mut comp = vec![0.0; whole.len()];
    while let Some((lo, hi, depth)) = stack.pop() {
        let (v, err, _) = gk15(&f, lo, hi);
        let width = ((hi - lo) / (b - a)).abs();
        if err <= target * width.max(1e-3) || depth >= 60 {
            // Kahan summation of accepted panels
            for i in 0..v.len() {
                let y = v[i] - comp[i];
                let t = total[i] + y;
                comp[i] = (t - total[i]) - y;
                total[i] = t;
            }
        } else {
            let mid = 0.5 * (lo + hi);
            stack.push((lo, mid, depth + 1));
            stack.push((mid, hi, depth + 1));
        }
    }
    total
}

pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64) -> f64 {
    integrate_vec(|x| vec![f(x)], a, b, rel_tol)[0]
}

/// ∫₀¹ α(1−c)^{α−1} g(c) dc through v = (1−c)^α.
pub fn weighted<F: Fn(f64) -> f64>(alpha: f64, g: F) -> f64 {
    integrate(|v: f64| g(1.0 - v.powf(1.0 / alpha)), 0.0, 1.0, 1e-15)
}

/// (1/Γ(α)) ∫ₐᵇ (t−τ)^{α−1} g(τ) dτ for b ≤ t, componentwise. Through
/// v = (t−τ)^α when the kernel is near-singular, directly otherwise.
pub fn rl_integral_vec<F: Fn(f64) -> Vec<f64>>(alpha: f64, g: F, a: f64, b: f64, t: f64) -> Vec<f64> {
    if t - b >= b - a {
        let mut out = integrate_vec(|tau| {
            let k = (t - tau).powf(alpha - 1.0);
            g(tau).into_iter().map(|v| v * k).collect()
        }, a, b, 1e-15);
        out.iter_mut().for_each(|v| *v /= gamma(alpha));
        return out;
    }
    let (lo, hi) = ((t - b).powf(alpha), (t - a).powf(alpha));
    let mut out = integrate_vec(|v: f64| g(t - v.powf(1.0 / alpha)), lo, hi, 1e-15);
    out.iter_mut().for_each(|v| *v /= gamma(alpha + 1.0));
    out
}

pub fn rl_integral<F: Fn(f64) -> f64>(alpha: f64, g: F, a: f64, b: f64, t: f64) -> f64 {
    rl_integral_vec(alpha, |x| vec![g(x)], a, b, t)[0]
}
