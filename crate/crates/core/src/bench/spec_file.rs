//! JSON problem files for the CLI.
//!
//! ```json
//! {
//!   "name": "brusselator",
//!   "alpha": 0.7,
//!   "T": 10.0,
//!   "initial": [[1.2, 2.8]],
//!   "field": { "polynomial": [
//!     [ {"coef": 1.0, "powers": [0, 0]}, {"coef": -4.0, "powers": [1, 0]}, {"coef": 1.0, "powers": [2, 1]} ],
//!     [ {"coef": 3.0, "powers": [1, 0]}, {"coef": -1.0, "powers": [2, 1]} ]
//!   ] }
//! }
//! ```
//!
//! `field` may instead be `{"builtin": "<name>"}` (one of the registry
//! problems, `van_der_pol` or `brusselator`) or `{"linear": [[...], ...]}`.

use std::path::Path;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::problems::{self, BenchProblem, Brusselator, LinearField, ReferenceRecipe, VanDerPol};
use crate::error::{Error, Result};
use crate::solver::{ProblemSpec, VectorField};

/// coef · t^{t_power} · Π_a y_a^{powers[a]}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub powers: Vec<u32>,
    #[serde(default)]
    pub t_power: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldSpec {
    Builtin(String),
    Linear(Vec<Vec<f64>>),
    /// One list of monomials per component.
    Polynomial(Vec<Vec<Monomial>>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProblemFile {
    #[serde(default = "default_name")]
    pub name: String,
    pub alpha: f64,
    #[serde(rename = "T")]
    pub t_final: f64,
    pub initial: Vec<Vec<f64>>,
    pub field: FieldSpec,
}

fn default_name() -> String {
    "custom".into()
}

#[derive(Debug, Clone)]
pub struct PolynomialField {
    components: Vec<Vec<Monomial>>,
}

impl PolynomialField {
    pub fn new(components: Vec<Vec<Monomial>>) -> Result<Self> {
        let m = components.len();
        if m == 0 {
            return Err(Error::ProblemSpec("polynomial field has no components".into()));
        }
        for term in components.iter().flatten() {
            if term.powers.len() != m {
                return Err(Error::ProblemSpec(format!(
                    "monomial has {} exponents for a {m}-dimensional system",
                    term.powers.len()
                )));
            }
            if !(term.t_power >= 0.0 && term.coef.is_finite()) {
                return Err(Error::ProblemSpec("monomials need finite coefficients and t_power >= 0".into()));
            }
        }
        Ok(Self { components })
    }
}

fn monomial_value(term: &Monomial, t: f64, y: &[f64], skip: Option<usize>) -> f64 {
    let mut v = term.coef;
    if term.t_power != 0.0 {
        v *= t.powf(term.t_power);
    }
    for (a, (&e, &ya)) in term.powers.iter().zip(y).enumerate() {
        let e = if skip == Some(a) { e - 1 } else { e };
        v *= ya.powi(e as i32);
    }
    v
}

impl VectorField for PolynomialField {
    fn dim(&self) -> usize {
        self.components.len()
    }

    fn eval(&self, t: f64, y: &[f64], out: &mut [f64]) {
        for (o, terms) in out.iter_mut().zip(&self.components) {
            *o = terms.iter().map(|term| monomial_value(term, t, y, None)).sum();
        }
    }

    fn jacobian(&self, t: f64, y: &[f64], jac: &mut DMatrix<f64>) {
        jac.fill(0.0);
        for (i, terms) in self.components.iter().enumerate() {
            for term in terms {
                for (b, &e) in term.powers.iter().enumerate() {
                    if e > 0 {
                        jac[(i, b)] += e as f64 * monomial_value(term, t, y, Some(b));
                    }
                }
            }
        }
    }
}

impl ProblemFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::ProblemSpec(format!("{}: {e}", path.display())))
    }

    pub fn into_bench(self) -> Result<BenchProblem> {
        let field: Arc<dyn VectorField> = match self.field {
            FieldSpec::Builtin(name) => match name.as_str() {
                "van_der_pol" => Arc::new(VanDerPol { mu: 10.0 }),
                "brusselator" => Arc::new(Brusselator { a: 1.0, b: 3.0 }),
                other => problems::registry(other)?.problem.field,
            },
            FieldSpec::Linear(rows) => {
                let m = rows.len();
                if m == 0 || rows.iter().any(|r| r.len() != m) {
                    return Err(Error::ProblemSpec("linear field needs a square matrix".into()));
                }
                let flat: Vec<f64> = rows.into_iter().flatten().collect();
                Arc::new(LinearField {
                    matrix: DMatrix::from_row_slice(m, m, &flat),
                })
            }
            FieldSpec::Polynomial(components) => Arc::new(PolynomialField::new(components)?),
        };
        let rows = self.initial.len();
        let cols = self.initial.first().map_or(0, Vec::len);
        if rows == 0 || self.initial.iter().any(|r| r.len() != cols) {
            return Err(Error::ProblemSpec("initial rows must be non-empty and equally long".into()));
        }
        let flat: Vec<f64> = self.initial.into_iter().flatten().collect();
        let problem = ProblemSpec::new(self.alpha, DMatrix::from_row_slice(rows, cols, &flat), field)?;
        Ok(BenchProblem {
            name: self.name,
            problem,
            t_final: self.t_final,
            exact: None,
            reference: ReferenceRecipe::Fine { factor: 2 },
            grid: Vec::new(),
        })
    }
}

/// A registry name, or else a path to a problem file.
pub fn resolve_problem(name_or_path: &str) -> Result<BenchProblem> {
    match problems::registry(name_or_path) {
        Ok(p) => Ok(p),
        Err(Error::UnknownProblem(_)) if Path::new(name_or_path).is_file() => {
            ProblemFile::load(Path::new(name_or_path))?.into_bench()
        }
        Err(e) => Err(e),
    }
}
