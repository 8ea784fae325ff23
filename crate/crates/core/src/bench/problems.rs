//! The four benchmark problems and their vector fields.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::solver::{ProblemSpec, VectorField};
use crate::special::gamma;

/// y^{(α)} = −y^{3/2} + g(t), with y^{3/2} extended oddly as |y|^{1/2} y.
#[derive(Debug, Clone)]
pub struct Problem1Field {
    alpha: f64,
    c8: f64,
    c4: f64,
    c0: f64,
}

impl Problem1Field {
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            c8: gamma(9.0) / gamma(9.0 - alpha),
            c4: 3.0 * gamma(5.0 + alpha / 2.0) / gamma(5.0 - alpha / 2.0),
            c0: 2.25 * gamma(alpha + 1.0),
        }
    }

    pub fn forcing(&self, t: f64) -> f64 {
        let a = self.alpha;
        let cube = 1.5 * t.powf(a / 2.0) - t.powi(4);
        self.c8 * t.powf(8.0 - a) - self.c4 * t.powf(4.0 - a / 2.0) + cube * cube * cube + self.c0
    }

    /// t^8 − 3 t^{4+α/2} + 9/4 t^α.
    pub fn exact(&self, t: f64) -> f64 {
        let a = self.alpha;
        t.powi(8) - 3.0 * t.powf(4.0 + a / 2.0) + 2.25 * t.powf(a)
    }
}

impl VectorField for Problem1Field {
    fn dim(&self) -> usize {
        1
    }

    fn eval(&self, t: f64, y: &[f64], out: &mut [f64]) {
        out[0] = -y[0].abs().sqrt() * y[0] + self.forcing(t);
    }

    fn jacobian(&self, _t: f64, y: &[f64], jac: &mut DMatrix<f64>) {
        jac[(0, 0)] = -1.5 * y[0].abs().sqrt();
    }
}

/// f(y) = A y.
#[derive(Debug, Clone)]
pub struct LinearField {
    pub matrix: DMatrix<f64>,
}

impl VectorField for LinearField {
    fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    fn eval(&self, _t: f64, y: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..y.len()).map(|j| self.matrix[(i, j)] * y[j]).sum();
        }
    }

    fn jacobian(&self, _t: f64, _y: &[f64], jac: &mut DMatrix<f64>) {
        jac.copy_from(&self.matrix);
    }
}

/// y1' = y2, y2' = −y1 − μ y2 (y1² − 1).
#[derive(Debug, Clone, Copy)]
pub struct VanDerPol {
    pub mu: f64,
}

impl VectorField for VanDerPol {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, _t: f64, y: &[f64], out: &mut [f64]) {
        out[0] = y[1];
        out[1] = -y[0] - self.mu * y[1] * (y[0] * y[0] - 1.0);
    }

    fn jacobian(&self, _t: f64, y: &[f64], jac: &mut DMatrix<f64>) {
        jac[(0, 0)] = 0.0;
        jac[(0, 1)] = 1.0;
        jac[(1, 0)] = -1.0 - 2.0 * self.mu * y[0] * y[1];
        jac[(1, 1)] = -self.mu * (y[0] * y[0] - 1.0);
    }
}

/// y1' = a − (b+1) y1 + y1² y2, y2' = b y1 − y1² y2.
#[derive(Debug, Clone, Copy)]
pub struct Brusselator {
    pub a: f64,
    pub b: f64,
}

impl VectorField for Brusselator {
    fn dim(&self) -> usize {
        2
    }

    fn eval(&self, _t: f64, y: &[f64], out: &mut [f64]) {
        let q = y[0] * y[0] * y[1];
        out[0] = self.a - (self.b + 1.0) * y[0] + q;
        out[1] = self.b * y[0] - q;
    }

    fn jacobian(&self, _t: f64, y: &[f64], jac: &mut DMatrix<f64>) {
        let (u, v) = (y[0], y[1]);
        jac[(0, 0)] = -(self.b + 1.0) + 2.0 * u * v;
        jac[(0, 1)] = u * u;
        jac[(1, 0)] = self.b - 2.0 * u * v;
        jac[(1, 1)] = -u * u;
    }
}

/// The 5×5 matrix of the stiff oscillatory linear test.
pub fn problem2_matrix() -> DMatrix<f64> {
    #[rustfmt::skip]
    let entries = [
         41.0,  41.0, -38.0,  40.0, -2.0,
        -79.0,  81.0,   2.0,   0.0, -2.0,
         20.0, -60.0,  20.0, -20.0, -8.0,
        -22.0,  58.0, -24.0,  20.0, -4.0,
          1.0,   1.0,  -2.0,  -4.0, -2.0,
    ];
    DMatrix::from_row_slice(5, 5, &entries) / 8.0
}

/// One point of a work–precision sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    #[serde(rename = "T")]
    pub t_final: f64,
    #[serde(rename = "N")]
    pub n_total: usize,
    pub n: usize,
    pub nu: usize,
    #[serde(default = "default_order")]
    pub s: usize,
    #[serde(default = "default_order")]
    pub k: usize,
}

fn default_order() -> usize {
    22
}

/// How reference values for mescd are obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReferenceRecipe {
    Exact,
    /// Same (n, ν, s, k) with N multiplied by the factor.
    Fine { factor: usize },
    /// A fixed high-resolution run, compared at shared nodes (at least the endpoint).
    Fixed { grid: GridPoint },
}

pub type ExactSolution = Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>;

#[derive(Clone)]
pub struct BenchProblem {
    pub name: String,
    pub problem: ProblemSpec,
    pub t_final: f64,
    pub exact: Option<ExactSolution>,
    pub reference: ReferenceRecipe,
    pub grid: Vec<GridPoint>,
}

impl std::fmt::Debug for BenchProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BenchProblem")
            .field("name", &self.name)
            .field("problem", &self.problem)
            .field("t_final", &self.t_final)
            .field("has_exact", &self.exact.is_some())
            .field("reference", &self.reference)
            .field("grid", &self.grid)
            .finish()
    }
}

pub const PROBLEM_NAMES: [&str; 4] = ["problem1", "problem2", "problem3", "problem4"];

fn point(t_final: f64, n_total: usize, n: usize, nu: usize) -> GridPoint {
    GridPoint {
        t_final,
        n_total,
        n,
        nu,
        s: 22,
        k: 22,
    }
}

pub fn problem1() -> BenchProblem {
    let alpha = 0.3;
    let field = Arc::new(Problem1Field::new(alpha));
    let exact = field.clone();
    BenchProblem {
        name: "problem1".into(),
        problem: ProblemSpec::new(alpha, DMatrix::zeros(1, 1), field).expect("problem 1 data"),
        t_final: 1.0,
        exact: Some(Arc::new(move |t| vec![exact.exact(t)])),
        reference: ReferenceRecipe::Exact,
        grid: (2..=5).map(|n_total| point(1.0, n_total, 1, 1)).collect(),
    }
}

pub fn problem2() -> BenchProblem {
    let field = Arc::new(LinearField {
        matrix: problem2_matrix(),
    });
    let y0 = DMatrix::from_row_slice(1, 5, &[1.0, 2.0, 3.0, 4.0, 5.0]);
    BenchProblem {
        name: "problem2".into(),
        problem: ProblemSpec::new(0.5, y0, field).expect("problem 2 data"),
        t_final: 20.0,
        exact: None,
        reference: ReferenceRecipe::Fine { factor: 2 },
        grid: (4..=12).map(|l| point(20.0, 50 * l, 1, 20)).collect(),
    }
}

pub fn problem3() -> BenchProblem {
    let y0 = DMatrix::from_row_slice(1, 2, &[0.0, -2.0]);
    BenchProblem {
        name: "problem3".into(),
        problem: ProblemSpec::new(0.9, y0, Arc::new(VanDerPol { mu: 10.0 })).expect("problem 3 data"),
        t_final: 30.0,
        exact: None,
        reference: ReferenceRecipe::Fixed {
            grid: point(30.0, 10_000, 5, 100),
        },
        grid: (4..=8).map(|l| point(30.0, 50 * l, 2, 50)).collect(),
    }
}

pub fn problem4() -> BenchProblem {
    let y0 = DMatrix::from_row_slice(1, 2, &[1.2, 2.8]);
    let grid = [10, 50, 100, 500, 1000]
        .into_iter()
        .map(|t| point(t as f64, t, 1, 20))
        .collect();
    BenchProblem {
        name: "problem4".into(),
        problem: ProblemSpec::new(0.7, y0, Arc::new(Brusselator { a: 1.0, b: 3.0 })).expect("problem 4 data"),
        t_final: 100.0,
        exact: None,
        reference: ReferenceRecipe::Fine { factor: 2 },
        grid,
    }
}

pub fn registry(name: &str) -> Result<BenchProblem> {
    match name {
        "problem1" => Ok(problem1()),
        "problem2" => Ok(problem2()),
        "problem3" => Ok(problem3()),
        "problem4" => Ok(problem4()),
        other => Err(Error::UnknownProblem(other.to_string())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn problem1_endpoint_value() {
        let f = Problem1Field::new(0.3);
        assert!((f.exact(1.0) - 0.25).abs() < 1e-15);
        assert_eq!(f.exact(0.0), 0.0);
    }

    #[test]
    fn brusselator_jacobian_matches_differences() {
        let b = Brusselator { a: 1.0, b: 3.0 };
        let y = [1.2, 2.8];
        let mut jac = DMatrix::zeros(2, 2);
        b.jacobian(0.0, &y, &mut jac);
        let eps = 1e-6;
        for j in 0..2 {
            let mut yp = y;
            let mut ym = y;
            yp[j] += eps;
            ym[j] -= eps;
            let (mut fp, mut fm) = ([0.0; 2], [0.0; 2]);
            b.eval(0.0, &yp, &mut fp);
            b.eval(0.0, &ym, &mut fm);
            for i in 0..2 {
                assert!(((fp[i] - fm[i]) / (2.0 * eps) - jac[(i, j)]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn unknown_name() {
        assert!(matches!(registry("problem9"), Err(Error::UnknownProblem(_))));
        for name in PROBLEM_NAMES {
            assert_eq!(registry(name).unwrap().name, name);
        }
    }
}
