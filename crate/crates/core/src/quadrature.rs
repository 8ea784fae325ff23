//! Orthonormal polynomials for the weight ω(c) = α(1−c)^{α−1} on [0,1] and
//! the associated Gauss–Jacobi rules.
//!
//! The weight is the classical Jacobi weight (1−x)^{α−1}(1+x)^0 on [−1,1]
//! under c = (1+x)/2, rescaled to unit mass. Its recurrence coefficients
//! are known in closed form, so no moments are ever formed. Nodes come from
//! the symmetric tridiagonal (Golub–Welsch) eigenproblem, are polished by a
//! Newton step on P_k, and the weights are the Christoffel numbers
//! 1/Σ_j P_j(c_i)², rescaled to unit total mass. Near c = 1 the rounding
//! of the node itself perturbs the largest Christoffel numbers by a few
//! 1e−14 when α is small; the rescaling removes the resulting mass defect.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Three-term recurrence of the polynomials orthonormal under ω on [0,1]:
///
/// `b[j+1] P_{j+1}(c) = (c − a[j]) P_j(c) − b[j] P_{j−1}(c)`, with `P_0 ≡ 1`.
///
/// `b[0]` holds the square root of the total mass, which is one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceTable {
    pub alpha: f64,
    pub max_degree: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Builds the recurrence for ω(c) = α(1−c)^{α−1} up to `max_degree`.
pub fn jacobi_recurrence(alpha: f64, max_degree: usize) -> Result<RecurrenceTable> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!(
            "weight exponent alpha must lie in (0,1), got {alpha}"
        )));
    }
    if max_degree < 1 {
        return Err(Error::Domain("max_degree must be at least 1".into()));
    }
    // Jacobi parameters on [-1,1]: (1-x)^{α-1} (1+x)^0.
    let ja = alpha - 1.0;
    let mut a = Vec::with_capacity(max_degree + 1);
    let mut b = Vec::with_capacity(max_degree + 1);
    for n in 0..=max_degree {
        let nf = n as f64;
        let diag = if n == 0 {
            -ja / (ja + 2.0)
        } else {
            let two_n_ab = 2.0 * nf + ja;
            -ja * ja / (two_n_ab * (two_n_ab + 2.0))
        };
        a.push(0.5 * (1.0 + diag));
        if n == 0 {
            b.push(1.0);
        } else {
            // sqrt(β_n)/2 with β_n the monic Jacobi coefficient for b = 0.
            let off = nf * (nf + alpha - 1.0)
                / ((2.0 * nf + alpha - 1.0)
                    * ((2.0 * nf + alpha) * (2.0 * nf + alpha - 2.0)).sqrt());
            b.push(off);
        }
    }
    Ok(RecurrenceTable {
        alpha,
        max_degree,
        a,
        b,
    })
}

impl RecurrenceTable {
    /// Values P_0(c), …, P_{s−1}(c) written into `out` (length `s`).
    pub fn basis_into(&self, c: f64, out: &mut [f64]) {
        let s = out.len();
        debug_assert!(s <= self.max_degree + 1);
        if s == 0 {
            return;
        }
        out[0] = 1.0;
        if s == 1 {
            return;
        }
        out[1] = (c - self.a[0]) / self.b[1];
        for j in 1..s - 1 {
            out[j + 1] = ((c - self.a[j]) * out[j] - self.b[j] * out[j - 1]) / self.b[j + 1];
        }
    }

    /// P_n(c) and P_n'(c) by the differentiated recurrence.
    pub fn value_and_derivative(&self, n: usize, c: f64) -> (f64, f64) {
        debug_assert!(n <= self.max_degree);
        let (mut p_prev, mut p) = (0.0, 1.0);
        let (mut d_prev, mut d) = (0.0, 0.0);
        for j in 0..n {
            let p_next = ((c - self.a[j]) * p - self.b[j] * p_prev) / self.b[j + 1];
            let d_next = ((c - self.a[j]) * d + p - self.b[j] * d_prev) / self.b[j + 1];
            p_prev = p;
            p = p_next;
            d_prev = d;
            d = d_next;
        }
        (p, d)
    }
}

/// Basis values (P_0(c), …, P_{s−1}(c)) by forward recurrence.
pub fn evaluate_basis(table: &RecurrenceTable, s: usize, c: f64) -> Vec<f64> {
    assert!(
        s <= table.max_degree + 1,
        "basis size {s} exceeds recurrence degree {}",
        table.max_degree
    );
    let mut out = vec![0.0; s];
    table.basis_into(c, &mut out);
    out
}

/// k-point Gauss–Jacobi rule for ω together with the k×s matrix of basis
/// values `basis[(i, j)] = P_j(c_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub alpha: f64,
    pub k: usize,
    pub s: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub basis: DMatrix<f64>,
}

impl QuadratureRule {
    /// 𝒫_sᵀΩ, the s×k projection mapping stage values onto coefficients.
    pub fn projection(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.s, self.k, |j, i| self.basis[(i, j)] * self.weights[i])
    }
}

/// Gauss rule for ω with `k` nodes, basis matrix truncated to `s` columns.
pub fn gauss_jacobi_rule(table: &RecurrenceTable, k: usize, s: usize) -> Result<QuadratureRule> {
    if s < 1 || s > k || k > table.max_degree {
        return Err(Error::Domain(format!(
            "need 1 <= s <= k <= max_degree, got s = {s}, k = {k}, max_degree = {}",
            table.max_degree
        )));
    }
    let mut nodes = tridiagonal_eigenvalues(&table.a[..k], &table.b[1..k])?;
    for c in nodes.iter_mut() {
        *c = polish_root(table, k, *c);
    }
    let mut full = vec![0.0; k];
    let mut weights = Vec::with_capacity(k);
    let mut basis = DMatrix::zeros(k, s);
    for (i, &c) in nodes.iter().enumerate() {
        table.basis_into(c, &mut full);
        let norm: f64 = full.iter().map(|p| p * p).sum();
        weights.push(1.0 / norm);
        for j in 0..s {
            basis[(i, j)] = full[j];
        }
    }
    let mass: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= mass);
    Ok(QuadratureRule {
        alpha: table.alpha,
        k,
        s,
        nodes,
        weights,
        basis,
    })
}

/// Newton refinement of a zero of P_k; keeps the eigenvalue if no step helps.
fn polish_root(table: &RecurrenceTable, k: usize, c0: f64) -> f64 {
    let mut c = c0;
    let (mut p, mut dp) = table.value_and_derivative(k, c);
    for _ in 0..3 {
        if dp == 0.0 || p == 0.0 {
            break;
        }
        let trial = c - p / dp;
        let (pt, dpt) = table.value_and_derivative(k, trial);
        if pt.abs() >= p.abs() {
            break;
        }
        c = trial;
        p = pt;
        dp = dpt;
    }
    c
}

/// Ascending eigenvalues of the symmetric tridiagonal matrix with the given
/// diagonal and off-diagonal.
pub(crate) fn tridiagonal_eigenvalues(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    debug_assert_eq!(off.len() + 1, n);
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            diag[i]
        } else if i + 1 == j {
            off[i]
        } else if j + 1 == i {
            off[j]
        } else {
            0.0
        }
    });
    let eig = jacobi
        .try_symmetric_eigen(f64::EPSILON, 1000 * n.max(1))
        .ok_or(Error::EigenSolve { size: n })?;
    let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    values.sort_by(|x, y| x.total_cmp(y));
    Ok(values)
}

/// `n`-point Gauss–Legendre nodes and weights on [0,1], ascending.
pub fn gauss_legendre_unit(n: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if n == 0 {
        return Err(Error::Domain("Gauss-Legendre rule needs at least one node".into()));
    }
    // Shifted Legendre, orthonormal under the unit weight on [0,1].
    let diag = vec![0.5; n];
    let off: Vec<f64> = (1..=n)
        .map(|j| {
            let jf = j as f64;
            jf / (2.0 * (4.0 * jf * jf - 1.0).sqrt())
        })
        .collect();
    let table = RecurrenceTable {
        alpha: 1.0,
        max_degree: n,
        a: diag,
        b: std::iter::once(1.0).chain(off.iter().copied()).collect(),
    };
    let mut nodes = tridiagonal_eigenvalues(&table.a[..n], &table.b[1..n])?;
    let mut full = vec![0.0; n];
    let mut weights = Vec::with_capacity(n);
    for c in nodes.iter_mut() {
        *c = polish_root(&table, n, *c);
        table.basis_into(*c, &mut full);
        weights.push(1.0 / full.iter().map(|p| p * p).sum::<f64>());
    }
    Ok((nodes, weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_alpha_outside_unit_interval() {
        assert!(matches!(jacobi_recurrence(0.0, 4), Err(Error::Domain(_))));
        assert!(matches!(jacobi_recurrence(1.0, 4), Err(Error::Domain(_))));
        assert!(matches!(jacobi_recurrence(f64::NAN, 4), Err(Error::Domain(_))));
    }

    #[test]
    fn first_polynomial_is_constant() {
        let t = jacobi_recurrence(0.5, 3).unwrap();
        for c in [0.0, 0.3, 1.0] {
            assert_eq!(evaluate_basis(&t, 1, c), vec![1.0]);
        }
    }

    #[test]
    fn shift_equals_first_moment() {
        for alpha in [0.1, 0.37, 0.5, 0.9] {
            let t = jacobi_recurrence(alpha, 2).unwrap();
            assert!((t.a[0] - 1.0 / (1.0 + alpha)).abs() < 1e-15);
            assert!(t.b.iter().skip(1).all(|&b| b > 0.0));
        }
    }

    #[test]
    fn one_point_rule() {
        for alpha in [0.2, 0.5, 0.8] {
            let t = jacobi_recurrence(alpha, 1).unwrap();
            let q = gauss_jacobi_rule(&t, 1, 1).unwrap();
            assert!((q.nodes[0] - 1.0 / (1.0 + alpha)).abs() < 1e-15);
            assert!((q.weights[0] - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rule_rejects_bad_sizes() {
        let t = jacobi_recurrence(0.5, 5).unwrap();
        assert!(gauss_jacobi_rule(&t, 6, 2).is_err());
        assert!(gauss_jacobi_rule(&t, 3, 4).is_err());
        assert!(gauss_jacobi_rule(&t, 3, 0).is_err());
    }

    #[test]
    fn nodes_are_zeros_of_pk() {
        let t = jacobi_recurrence(0.3, 22).unwrap();
        let q = gauss_jacobi_rule(&t, 22, 22).unwrap();
        for &c in &q.nodes {
            let (p, dp) = t.value_and_derivative(22, c);
            assert!(p.abs() <= 1e-12 * dp.abs().max(1.0), "P_22({c}) = {p}");
        }
        assert!(q.nodes.windows(2).all(|w| w[0] < w[1]));
        assert!(q.nodes[0] > 0.0 && q.nodes[21] < 1.0);
    }

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre_unit(30).unwrap();
        for p in [0, 1, 7, 30, 59] {
            let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum();
            assert!((q - 1.0 / (p as f64 + 1.0)).abs() < 1e-15, "degree {p}");
        }
    }
}
