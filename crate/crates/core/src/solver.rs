//! Step-by-step solution of y^{(α)} = f(t, y) on a mixed mesh.
//!
//! On every step the unknowns are the s approximate Fourier coefficients
//! γ̂ (an s×m block). Stage values are
//! `Y = φ(c) + h^α 𝓘 γ̂`, and γ̂ solves `γ̂ = 𝒫ᵀΩ f(Y)`. The memory term φ
//! collects the Taylor polynomial and every earlier block through the
//! precomputed history kernels. The block system is solved by simplified
//! Newton with the matrix `I − h^α (𝒫ᵀΩ𝓘) ⊗ J_f(y_left)`, factored once
//! per step.

use std::io::Write;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractional::{build_tables, FractionalTables, TailKernel, TailKernelConfig};
use crate::mesh::{MixedMesh, StepKind};
use crate::quadrature::{gauss_jacobi_rule, jacobi_recurrence, QuadratureRule, RecurrenceTable};
use crate::special::gamma;

/// Right-hand side of the fractional equation.
///
/// Implementations must be callable from several threads at once.
pub trait VectorField: Send + Sync {
    fn dim(&self) -> usize;

    fn eval(&self, t: f64, y: &[f64], out: &mut [f64]);

    /// ∂f/∂y at (t, y), written into an m×m matrix.
    fn jacobian(&self, t: f64, y: &[f64], jac: &mut DMatrix<f64>);

    /// Row-wise evaluation on a batch of states (one state per row).
    fn eval_batch(&self, t: &[f64], y: &DMatrix<f64>, out: &mut DMatrix<f64>) {
        let m = self.dim();
        let mut yi = vec![0.0; m];
        let mut fi = vec![0.0; m];
        for (r, &tr) in t.iter().enumerate() {
            for a in 0..m {
                yi[a] = y[(r, a)];
            }
            self.eval(tr, &yi, &mut fi);
            for a in 0..m {
                out[(r, a)] = fi[a];
            }
        }
    }
}

/// A fractional initial value problem.
#[derive(Clone)]
pub struct ProblemSpec {
    pub alpha: f64,
    /// ℓ×m matrix whose row j is y^{(j)}(0), ℓ = ⌈α⌉.
    pub initial: DMatrix<f64>,
    pub field: Arc<dyn VectorField>,
}

impl std::fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("alpha", &self.alpha)
            .field("initial", &self.initial)
            .field("dim", &self.field.dim())
            .finish()
    }
}

impl ProblemSpec {
    pub fn new(alpha: f64, initial: DMatrix<f64>, field: Arc<dyn VectorField>) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) || alpha.fract() == 0.0 {
            return Err(Error::Domain(format!(
                "fractional order must be positive and non-integer, got {alpha}"
            )));
        }
        let ell = alpha.ceil() as usize;
        if initial.nrows() != ell {
            return Err(Error::Domain(format!(
                "order {alpha} needs {ell} initial rows, got {}",
                initial.nrows()
            )));
        }
        if initial.ncols() != field.dim() {
            return Err(Error::Domain(format!(
                "initial data has {} columns but the vector field has dimension {}",
                initial.ncols(),
                field.dim()
            )));
        }
        Ok(Self {
            alpha,
            initial,
            field,
        })
    }

    pub fn dim(&self) -> usize {
        self.field.dim()
    }

    /// ℓ = ⌈α⌉.
    pub fn ell(&self) -> usize {
        self.initial.nrows()
    }
}

/// Σ_{j<ℓ} t^j/j! y_0^j, evaluated by Horner's rule over the rows.
pub fn taylor_term(problem: &ProblemSpec, t: f64) -> Vec<f64> {
    let mut out = vec![0.0; problem.dim()];
    taylor_into(&problem.initial, t, &mut out);
    out
}

fn taylor_into(initial: &DMatrix<f64>, t: f64, out: &mut [f64]) {
    let ell = initial.nrows();
    for (a, o) in out.iter_mut().enumerate() {
        let mut acc = initial[(ell - 1, a)];
        for r in (0..ell - 1).rev() {
            acc = initial[(r, a)] + t / (r + 1) as f64 * acc;
        }
        *o = acc;
    }
}

/// Coefficient blocks of every completed step, graded first.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CoefficientHistory {
    pub graded: Vec<DMatrix<f64>>,
    pub uniform: Vec<DMatrix<f64>>,
}

impl CoefficientHistory {
    pub fn len(&self) -> usize {
        self.graded.len() + self.uniform.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn push(&mut self, kind: StepKind, block: DMatrix<f64>) {
        match kind {
            StepKind::Graded => {
                debug_assert!(self.uniform.is_empty());
                self.graded.push(block)
            }
            StepKind::Uniform => self.uniform.push(block),
        }
    }

    pub fn last(&self) -> Option<&DMatrix<f64>> {
        self.uniform.last().or_else(|| self.graded.last())
    }
}

/// How the Newton matrix's Jacobian is chosen on each step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum JacobianPolicy {
    /// J_f at the left endpoint, one factorization per step.
    FrozenAtLeft,
    /// Starts like `FrozenAtLeft`; whenever the residual fails to halve,
    /// J_f is re-evaluated at the weighted stage mean and refactored.
    #[default]
    RefreshOnStall,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub newton_rel_tol: f64,
    pub newton_abs_tol: f64,
    pub max_iterations: usize,
    pub jacobian: JacobianPolicy,
    /// Keep the stage values of every step in the trajectory.
    pub keep_stages: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton_rel_tol: 1e-14,
            newton_abs_tol: 1e-15,
            max_iterations: 50,
            jacobian: JacobianPolicy::RefreshOnStall,
            keep_stages: false,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<()> {
        if !(self.newton_rel_tol > 0.0 && self.newton_abs_tol > 0.0) {
            return Err(Error::Domain("Newton tolerances must be positive".into()));
        }
        if self.max_iterations == 0 {
            return Err(Error::Domain("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

/// Per-step convergence record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepDiagnostics {
    pub iterations: usize,
    /// ‖γ̂ − 𝒫ᵀΩ f(Y)‖∞ at acceptance.
    pub residual: f64,
    /// max_i ‖Σ_ι P_ι(c_i) γ̂_ι − f(Y_i)‖∞ at acceptance.
    pub collocation: f64,
    pub field_norm: f64,
    pub coefficient_norm: f64,
}

#[derive(Debug, Clone)]
pub struct SolutionTrajectory {
    pub times: Vec<f64>,
    /// One row per mesh node.
    pub values: Vec<Vec<f64>>,
    /// Stage values (k×m) per step, when requested.
    pub stages: Option<Vec<DMatrix<f64>>>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub history: CoefficientHistory,
}

impl SolutionTrajectory {
    pub fn last_value(&self) -> &[f64] {
        self.values.last().expect("trajectory has at least one node")
    }

    pub fn dim(&self) -> usize {
        self.values[0].len()
    }

    /// Rows `t,y1,...,ym`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        write!(out, "t")?;
        for a in 1..=self.dim() {
            write!(out, ",y{a}")?;
        }
        writeln!(out)?;
        for (t, y) in self.times.iter().zip(&self.values) {
            write!(out, "{t:e}")?;
            for v in y {
                write!(out, ",{v:e}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Mesh echo, node values and per-step diagnostics.
    pub fn to_json(&self, mesh: &MixedMesh) -> serde_json::Value {
        serde_json::json!({
            "mesh": mesh.echo(),
            "times": self.times,
            "values": self.values,
            "diagnostics": self.diagnostics,
        })
    }
}

/// Everything precomputed for one (α, k, s, mesh) combination.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub recurrence: RecurrenceTable,
    pub rule: QuadratureRule,
    pub tables: FractionalTables,
}

impl Discretization {
    pub fn new(alpha: f64, k: usize, s: usize, mesh: &MixedMesh, kernel: TailKernelConfig) -> Result<Self> {
        let recurrence = jacobi_recurrence(alpha, k.max(s))?;
        let rule = gauss_jacobi_rule(&recurrence, k, s)?;
        let tables = build_tables(mesh, &rule, &recurrence, kernel)?;
        Ok(Self {
            recurrence,
            rule,
            tables,
        })
    }

    pub fn solve(&self, problem: &ProblemSpec, mesh: &MixedMesh, config: &SolverConfig) -> Result<SolutionTrajectory> {
        solve(problem, mesh, &self.rule, &self.tables, config)
    }
}

/// Quantities derived once from the rule and tables and reused on every step.
#[derive(Debug, Clone)]
pub struct StepOperator {
    pub alpha: f64,
    pub k: usize,
    pub s: usize,
    /// Abscissae followed by 1.
    points: Vec<f64>,
    /// 𝒫 (k×s).
    basis: DMatrix<f64>,
    /// 𝒫ᵀΩ (s×k).
    projection: DMatrix<f64>,
    /// 𝓘 (k×s).
    local: DMatrix<f64>,
    /// 𝒫ᵀΩ𝓘 (s×s).
    core: DMatrix<f64>,
    /// Set when the tables defer their cross blocks.
    cross_kernel: Option<TailKernel>,
}

impl StepOperator {
    pub fn new(rule: &QuadratureRule, tables: &FractionalTables) -> Result<Self> {
        if rule.alpha != tables.alpha || rule.k != tables.k || rule.s != tables.s {
            return Err(Error::Domain(
                "quadrature rule and fractional tables were built for different (alpha, k, s)".into(),
            ));
        }
        let projection = rule.projection();
        let local = tables.local.rows(0, rule.k).into_owned();
        let core = &projection * &local;
        let cross_kernel = if tables.cross_deferred {
            let table = jacobi_recurrence(rule.alpha, rule.k.max(rule.s))?;
            Some(TailKernel::new(&table, rule.s, tables.kernel)?)
        } else {
            None
        };
        Ok(Self {
            alpha: rule.alpha,
            k: rule.k,
            s: rule.s,
            points: rule.nodes.iter().copied().chain(std::iter::once(1.0)).collect(),
            basis: rule.basis.clone(),
            projection,
            local,
            core,
            cross_kernel,
        })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.points[..self.k]
    }
}

fn taylor_rows(problem: &ProblemSpec, points: &[f64], t0: f64, h: f64) -> DMatrix<f64> {
    let m = problem.dim();
    let mut phi = DMatrix::zeros(points.len(), m);
    let mut row = vec![0.0; m];
    for (r, &c) in points.iter().enumerate() {
        taylor_into(&problem.initial, t0 + c * h, &mut row);
        for a in 0..m {
            phi[(r, a)] = row[a];
        }
    }
    phi
}

fn missing(what: &str, index: usize) -> Error {
    Error::Sequencing(format!("history block {index} needed by {what} is missing"))
}

/// φ̂_i at the abscissae and at c = 1 ((k+1)×m), for graded step i (1-based).
pub fn memory_term_graded(
    i: usize,
    history: &CoefficientHistory,
    tables: &FractionalTables,
    mesh: &MixedMesh,
    problem: &ProblemSpec,
    op: &StepOperator,
) -> Result<DMatrix<f64>> {
    if i == 0 || i > mesh.nu {
        return Err(Error::Sequencing(format!("graded step {i} outside 1..={}", mesh.nu)));
    }
    let mut phi = taylor_rows(problem, &op.points, mesh.times[i - 1], mesh.graded_step(i));
    for mu in 1..i {
        let block = history.graded.get(mu - 1).ok_or_else(|| missing("graded memory", mu))?;
        let kernel = if mesh.is_uniform() {
            &tables.uniform[i - mu - 1]
        } else {
            &tables.graded[i - mu - 1]
        };
        let weight = mesh.graded_step(mu).powf(op.alpha);
        phi.gemm(weight, kernel, block, 1.0);
    }
    Ok(phi)
}

/// φ_j at the abscissae and at c = 1 ((k+1)×m), for uniform step j (n < j ≤ N).
pub fn memory_term_uniform(
    j: usize,
    history: &CoefficientHistory,
    tables: &FractionalTables,
    mesh: &MixedMesh,
    problem: &ProblemSpec,
    op: &StepOperator,
) -> Result<DMatrix<f64>> {
    let n = mesh.n_glue;
    if j <= n || j > mesh.n_total {
        return Err(Error::Sequencing(format!(
            "uniform step {j} outside {}..={}",
            n + 1,
            mesh.n_total
        )));
    }
    let mut phi = taylor_rows(problem, &op.points, (j - 1) as f64 * mesh.h, mesh.h);
    for i in 1..=mesh.nu {
        let block = history.graded.get(i - 1).ok_or_else(|| missing("uniform memory", i))?;
        let weight = mesh.graded_step(i).powf(op.alpha);
        if mesh.is_uniform() {
            phi.gemm(weight, &tables.uniform[j - i - 1], block, 1.0);
        } else if let Some(kernel) = op.cross_kernel.as_ref().filter(|_| tables.cross_deferred) {
            let computed = tables.compute_cross_block(kernel, &op.points, i, j)?;
            phi.gemm(weight, &computed, block, 1.0);
        } else if tables.cross_deferred {
            return Err(Error::Sequencing("cross blocks deferred but no kernel available".into()));
        } else {
            phi.gemm(weight, tables.cross_block(i, j), block, 1.0);
        }
    }
    let h_alpha = mesh.h.powf(op.alpha);
    for mu in n + 1..j {
        let block = history
            .uniform
            .get(mu - n - 1)
            .ok_or_else(|| missing("uniform memory", mu))?;
        phi.gemm(h_alpha, &tables.uniform[j - mu - 1], block, 1.0);
    }
    Ok(phi)
}

/// Outcome of one block solve.
#[derive(Debug, Clone)]
pub struct StepSolution {
    pub gamma: DMatrix<f64>,
    pub stages: DMatrix<f64>,
    pub diagnostics: StepDiagnostics,
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |acc, v| acc.max(v.abs()))
}

/// Solves the s×m block system of one step.
///
/// `phi` holds the memory term at the abscissae (the first k rows are used),
/// `y_left` the solution at the left endpoint where the Jacobian is frozen.
#[allow(clippy::too_many_arguments)]
pub fn solve_step(
    phi: &DMatrix<f64>,
    t_left: f64,
    h: f64,
    y_left: &[f64],
    problem: &ProblemSpec,
    op: &StepOperator,
    config: &SolverConfig,
    guess: Option<&DMatrix<f64>>,
    step_index: usize,
) -> Result<StepSolution> {
    let (k, s, m) = (op.k, op.s, problem.dim());
    let h_alpha = h.powf(op.alpha);
    let times: Vec<f64> = op.nodes().iter().map(|c| t_left + c * h).collect();
    let phi_stages = phi.rows(0, k);

    let mut gamma = match guess {
        Some(g) => g.clone(),
        None => DMatrix::zeros(s, m),
    };
    let mut jac = DMatrix::zeros(m, m);
    problem.field.jacobian(t_left, y_left, &mut jac);
    let mut lu = newton_matrix(&op.core, h_alpha, &jac).lu();

    let mut stages = DMatrix::zeros(k, m);
    let mut field = DMatrix::zeros(k, m);
    let mut previous = f64::INFINITY;
    let mut iterations = 0;
    loop {
        stages.copy_from(&phi_stages);
        stages.gemm(h_alpha, &op.local, &gamma, 1.0);
        problem.field.eval_batch(&times, &stages, &mut field);
        let colloc = &op.basis * &gamma - &field;
        let fixed_point = &op.projection * &colloc;
        let residual = if k == s { max_abs(&colloc) } else { max_abs(&fixed_point) };
        let gamma_norm = max_abs(&gamma);
        let threshold = config.newton_abs_tol + config.newton_rel_tol * gamma_norm;
        if !residual.is_finite() {
            return Err(Error::NewtonFailure {
                step: step_index,
                time: t_left,
                iterations,
                residual,
            });
        }
        if residual <= threshold {
            return Ok(StepSolution {
                gamma,
                stages,
                diagnostics: StepDiagnostics {
                    iterations,
                    residual: max_abs(&fixed_point),
                    collocation: max_abs(&colloc),
                    field_norm: max_abs(&field),
                    coefficient_norm: gamma_norm,
                },
            });
        }
        if iterations == config.max_iterations {
            return Err(Error::NewtonFailure {
                step: step_index,
                time: t_left,
                iterations,
                residual,
            });
        }
        if config.jacobian == JacobianPolicy::RefreshOnStall && iterations > 0 && residual > 0.5 * previous {
            let mean: Vec<f64> = (0..m)
                .map(|a| (0..k).map(|i| op.projection[(0, i)] * stages[(i, a)]).sum())
                .collect();
            problem.field.jacobian(t_left + 0.5 * h, &mean, &mut jac);
            lu = newton_matrix(&op.core, h_alpha, &jac).lu();
        }
        previous = residual;

        let rhs = DVector::from_iterator(s * m, fixed_point.transpose().iter().copied());
        let delta = lu.solve(&rhs).ok_or_else(|| {
            Error::Singular(format!("Newton matrix singular at step {step_index}"))
        })?;
        for iota in 0..s {
            for a in 0..m {
                gamma[(iota, a)] -= delta[iota * m + a];
            }
        }
        iterations += 1;
    }
}

/// I − h^α C ⊗ J with unknowns ordered coefficient-major.
fn newton_matrix(core: &DMatrix<f64>, h_alpha: f64, jac: &DMatrix<f64>) -> DMatrix<f64> {
    let (s, m) = (core.nrows(), jac.nrows());
    DMatrix::from_fn(s * m, s * m, |r, c| {
        let (iota, a) = (r / m, r % m);
        let (kappa, b) = (c / m, c % m);
        let id = if r == c { 1.0 } else { 0.0 };
        id - h_alpha * core[(iota, kappa)] * jac[(a, b)]
    })
}

/// y at the right endpoint: φ(1) + h^α/Γ(α+1) γ̂_0.
pub fn advance_step(phi_end: &[f64], coefficients: &DMatrix<f64>, h: f64, alpha: f64) -> Vec<f64> {
    let scale = h.powf(alpha) / gamma(alpha + 1.0);
    phi_end
        .iter()
        .enumerate()
        .map(|(a, p)| p + scale * coefficients[(0, a)])
        .collect()
}

pub fn solve(
    problem: &ProblemSpec,
    mesh: &MixedMesh,
    rule: &QuadratureRule,
    tables: &FractionalTables,
    config: &SolverConfig,
) -> Result<SolutionTrajectory> {
    config.validate()?;
    if problem.alpha != rule.alpha {
        return Err(Error::Domain(format!(
            "problem order {} differs from the method's {}",
            problem.alpha, rule.alpha
        )));
    }
    if !tables.matches(mesh) {
        return Err(Error::Domain("fractional tables were built for a different mesh".into()));
    }
    let op = StepOperator::new(rule, tables)?;
    let m = problem.dim();
    let steps = mesh.step_count();

    let mut values = Vec::with_capacity(steps + 1);
    values.push(problem.initial.row(0).iter().copied().collect::<Vec<f64>>());
    let mut history = CoefficientHistory::default();
    let mut diagnostics = Vec::with_capacity(steps);
    let mut stages = config.keep_stages.then(Vec::new);
    let mut phi_end = vec![0.0; m];

    for index in 0..steps {
        let desc = mesh.step_descriptor(index)?;
        let phi = match desc.kind {
            StepKind::Graded => memory_term_graded(desc.local_index, &history, tables, mesh, problem, &op)?,
            StepKind::Uniform => memory_term_uniform(desc.local_index, &history, tables, mesh, problem, &op)?,
        };
        let solution = solve_step(
            &phi,
            desc.left_time,
            desc.size,
            &values[index],
            problem,
            &op,
            config,
            history.last(),
            index,
        )?;
        for a in 0..m {
            phi_end[a] = phi[(op.k, a)];
        }
        values.push(advance_step(&phi_end, &solution.gamma, desc.size, op.alpha));
        diagnostics.push(solution.diagnostics);
        if let Some(st) = stages.as_mut() {
            st.push(solution.stages);
        }
        history.push(desc.kind, solution.gamma);
    }

    Ok(SolutionTrajectory {
        times: mesh.times.clone(),
        values,
        stages,
        diagnostics,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Zero;
    impl VectorField for Zero {
        fn dim(&self) -> usize {
            2
        }
        fn eval(&self, _t: f64, _y: &[f64], out: &mut [f64]) {
            out.iter_mut().for_each(|o| *o = 0.0);
        }
        fn jacobian(&self, _t: f64, _y: &[f64], jac: &mut DMatrix<f64>) {
            jac.fill(0.0);
        }
    }

    #[test]
    fn taylor_rows_by_order() {
        let one = ProblemSpec::new(0.5, DMatrix::from_row_slice(1, 2, &[3.0, -1.0]), Arc::new(Zero)).unwrap();
        assert_eq!(taylor_term(&one, 7.0), vec![3.0, -1.0]);
        let two = ProblemSpec::new(
            1.5,
            DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.5, -1.0]),
            Arc::new(Zero),
        )
        .unwrap();
        assert_eq!(taylor_term(&two, 2.0), vec![2.0, 0.0]);
    }

    #[test]
    fn problem_validation() {
        let rows = DMatrix::from_row_slice(1, 2, &[0.0, 0.0]);
        assert!(ProblemSpec::new(1.0, rows.clone(), Arc::new(Zero)).is_err());
        assert!(ProblemSpec::new(1.5, rows.clone(), Arc::new(Zero)).is_err());
        assert!(ProblemSpec::new(0.5, DMatrix::zeros(1, 3), Arc::new(Zero)).is_err());
        assert!(ProblemSpec::new(0.5, rows, Arc::new(Zero)).is_ok());
    }

    #[test]
    fn history_ordering() {
        let mut h = CoefficientHistory::default();
        assert!(h.last().is_none());
        h.push(StepKind::Graded, DMatrix::from_element(1, 1, 1.0));
        h.push(StepKind::Uniform, DMatrix::from_element(1, 1, 2.0));
        assert_eq!(h.len(), 2);
        assert_eq!(h.last().unwrap()[(0, 0)], 2.0);
    }

    #[test]
    fn kronecker_ordering() {
        let core = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let jac = DMatrix::from_row_slice(2, 2, &[5.0, 6.0, 7.0, 8.0]);
        let m = newton_matrix(&core, 1.0, &jac);
        // row (iota=1, a=0), col (kappa=0, b=1): -core[1,0]*jac[0,1]
        assert_eq!(m[(2, 1)], -18.0);
        assert_eq!(m[(0, 0)], 1.0 - 5.0);
    }
}
