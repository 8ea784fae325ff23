//! Riemann–Liouville integrals of the basis polynomials and the history
//! kernels J_ι(x) = (1/Γ(α)) ∫₀¹ (x−τ)^{α−1} P_ι(τ) dτ, x ≥ 1.
//!
//! Every table row set holds the k abscissae followed by the right endpoint
//! c = 1, so that memory terms and step endpoints share one lookup.

use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{geometric_sum, MixedMesh};
use crate::quadrature::{gauss_legendre_unit, QuadratureRule, RecurrenceTable};
use crate::special::gamma;

/// I^α P_j(c_i) for the k abscissae, by the same-weight identity
/// I^α P(c) = c^α/Γ(α+1) Σ_ν b_ν P(c c_ν), exact for deg P ≤ 2k−1.
pub fn rl_basis_matrix(rule: &QuadratureRule, table: &RecurrenceTable, s: usize) -> DMatrix<f64> {
    assert!(s <= rule.k, "s = {s} exceeds the rule size {}", rule.k);
    let mut out = DMatrix::zeros(rule.k, s);
    for (i, &c) in rule.nodes.iter().enumerate() {
        let row = rl_basis_at(rule, table, s, c);
        for j in 0..s {
            out[(i, j)] = row[j];
        }
    }
    out
}

/// I^α P_j(c) for j < s at a single point c ∈ [0,1].
pub fn rl_basis_at(rule: &QuadratureRule, table: &RecurrenceTable, s: usize, c: f64) -> Vec<f64> {
    let alpha = rule.alpha;
    let scale = c.powf(alpha) / gamma(alpha + 1.0);
    let mut acc = vec![0.0; s];
    let mut p = vec![0.0; s];
    for (&cv, &bv) in rule.nodes.iter().zip(&rule.weights) {
        table.basis_into(c * cv, &mut p);
        for (a, pj) in acc.iter_mut().zip(&p) {
            *a += bv * pj;
        }
    }
    acc.iter_mut().for_each(|a| *a *= scale);
    acc
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailKernelConfig {
    /// Gauss–Legendre points per panel.
    pub panel_order: usize,
    /// Each graded panel is this factor shorter than its predecessor.
    pub grading_ratio: f64,
    /// Grading stops once the remaining tail is this short.
    pub min_panel: f64,
}

impl Default for TailKernelConfig {
    fn default() -> Self {
        Self {
            panel_order: 30,
            grading_ratio: 2.0,
            min_panel: 2f64.powi(-45),
        }
    }
}

impl TailKernelConfig {
    fn validate(&self) -> Result<()> {
        if self.panel_order < 10 {
            return Err(Error::Domain(format!(
                "panel order must be at least 10, got {}",
                self.panel_order
            )));
        }
        if self.grading_ratio.is_nan() || self.grading_ratio <= 1.0 {
            return Err(Error::Domain(format!(
                "grading ratio must exceed 1, got {}",
                self.grading_ratio
            )));
        }
        if !(self.min_panel > 0.0 && self.min_panel < 1.0) {
            return Err(Error::Domain(format!(
                "minimum panel must lie in (0,1), got {}",
                self.min_panel
            )));
        }
        Ok(())
    }
}

/// One quadrature panel [1 − far, 1 − near] with cached node data.
#[derive(Debug, Clone)]
struct Panel {
    /// 1 − τ at each node.
    gap: Vec<f64>,
    weight: Vec<f64>,
    /// P_ι(τ) at each node, node-major (len = nodes × s).
    basis: Vec<f64>,
    far: f64,
    near: f64,
}

impl Panel {
    fn new(far: f64, near: f64, x: &[f64], w: &[f64], table: &RecurrenceTable, s: usize) -> Self {
        let len = far - near;
        let gap: Vec<f64> = x.iter().map(|&xq| far - len * xq).collect();
        let weight: Vec<f64> = w.iter().map(|&wq| len * wq).collect();
        let mut basis = vec![0.0; x.len() * s];
        for (q, g) in gap.iter().enumerate() {
            table.basis_into(1.0 - g, &mut basis[q * s..(q + 1) * s]);
        }
        Self {
            gap,
            weight,
            basis,
            far,
            near,
        }
    }
}

/// Evaluator for J_ι(x), ι < s, by composite Gauss–Legendre panels graded
/// toward τ = 1.
///
/// For x ≥ 2 one panel covers [0,1]. Below that, panels
/// [1 − L, 1 − L/g] are laid down while the remaining length L exceeds
/// max(x − 1, min_panel); the final panel [1 − L, 1] ends at the
/// near-singular point. When x − 1 is below `min_panel` the last panel
/// integrates (x−τ)^{α−1}(P(τ) − P(1)) and adds P(1)'s part in closed form.
#[derive(Debug, Clone)]
pub struct TailKernel {
    alpha: f64,
    s: usize,
    cfg: TailKernelConfig,
    inv_gamma_alpha: f64,
    p_at_one: Vec<f64>,
    /// Graded panels [1 − g^{−m}, 1 − g^{−m−1}].
    graded: Vec<Panel>,
    /// Closing panels [1 − g^{−m}, 1].
    closing: Vec<Panel>,
}

impl TailKernel {
    pub fn new(table: &RecurrenceTable, s: usize, cfg: TailKernelConfig) -> Result<Self> {
        cfg.validate()?;
        if s == 0 || s > table.max_degree + 1 {
            return Err(Error::Domain(format!(
                "kernel degree count {s} not supported by recurrence of degree {}",
                table.max_degree
            )));
        }
        let (x, w) = gauss_legendre_unit(cfg.panel_order)?;
        let g = cfg.grading_ratio;
        let mut graded = Vec::new();
        let mut closing = Vec::new();
        let mut far = 1.0;
        loop {
            closing.push(Panel::new(far, 0.0, &x, &w, table, s));
            if far <= cfg.min_panel {
                break;
            }
            graded.push(Panel::new(far, far / g, &x, &w, table, s));
            far /= g;
        }
        let mut p_at_one = vec![0.0; s];
        table.basis_into(1.0, &mut p_at_one);
        Ok(Self {
            alpha: table.alpha,
            s,
            cfg,
            inv_gamma_alpha: 1.0 / gamma(table.alpha),
            p_at_one,
            graded,
            closing,
        })
    }

    pub fn degree_count(&self) -> usize {
        self.s
    }

    pub fn config(&self) -> &TailKernelConfig {
        &self.cfg
    }

    /// J_ι(x) for ι = 0..s−1 written into `out`.
    pub fn eval_into(&self, x: f64, out: &mut [f64]) -> Result<()> {
        if !x.is_finite() || x < 1.0 {
            return Err(Error::Domain(format!("tail kernel argument must be >= 1, got {x}")));
        }
        debug_assert_eq!(out.len(), self.s);
        out.iter_mut().for_each(|v| *v = 0.0);
        let dist = x - 1.0;
        let threshold = dist.max(self.cfg.min_panel);
        let mut m = 0;
        if dist < 1.0 {
            while m < self.graded.len() && self.closing[m].far > threshold {
                self.accumulate(&self.graded[m], dist, false, out);
                m += 1;
            }
        }
        let last = &self.closing[m];
        let subtract = dist < last.far;
        self.accumulate(last, dist, subtract, out);
        if subtract {
            // ∫_{1−L}^{1} (x−τ)^{α−1} dτ = ((d+L)^α − d^α)/α
            let base = if dist > 0.0 {
                dist.powf(self.alpha) * (self.alpha * (last.far / dist).ln_1p()).exp_m1()
            } else {
                last.far.powf(self.alpha)
            } / self.alpha;
            for (o, p1) in out.iter_mut().zip(&self.p_at_one) {
                *o += p1 * base;
            }
        }
        out.iter_mut().for_each(|v| *v *= self.inv_gamma_alpha);
        Ok(())
    }

    pub fn eval(&self, x: f64) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.s];
        self.eval_into(x, &mut out)?;
        Ok(out)
    }

    fn accumulate(&self, panel: &Panel, dist: f64, subtract: bool, out: &mut [f64]) {
        let s = self.s;
        let expo = self.alpha - 1.0;
        for q in 0..panel.gap.len() {
            let kernel = panel.weight[q] * (dist + panel.gap[q]).powf(expo);
            let p = &panel.basis[q * s..(q + 1) * s];
            if subtract {
                for ((o, pv), p1) in out.iter_mut().zip(p).zip(&self.p_at_one) {
                    *o += kernel * (pv - p1);
                }
            } else {
                for (o, pv) in out.iter_mut().zip(p) {
                    *o += kernel * pv;
                }
            }
        }
        debug_assert!(panel.near >= 0.0);
    }
}

/// Single-value convenience wrapper around [`TailKernel`].
pub fn tail_kernel(
    table: &RecurrenceTable,
    iota: usize,
    x: f64,
    cfg: TailKernelConfig,
) -> Result<f64> {
    let kernel = TailKernel::new(table, iota + 1, cfg)?;
    Ok(kernel.eval(x)?[iota])
}

/// Precomputed integrals driving the stage equations and memory terms.
///
/// Each matrix is (k+1)×s: rows 0..k at the abscissae, row k at c = 1.
///
/// * `local`: I^α P_j(c).
/// * `uniform[d−1]`: J_j(d + c), d = 1, …, N−n−1 (N−1 on a uniform mesh).
/// * `graded[d−1]`: J_j((r^d − 1)/(r − 1) + c r^d), d = 1, …, ν−1.
/// * `cross[i·(N−n) + (j−n)]`: J_j(((j+c)(r^ν−1) − n(r^i−1))/(n r^i (r−1))),
///   i = 0, …, ν−1, j = n, …, N−1.
///
/// On a uniform mesh the prefix cells reuse `uniform`, so `graded` and
/// `cross` are empty. When ν·(N−n) exceeds the block limit, `cross` is left
/// empty and `cross_deferred` is set; each block is then evaluated on demand
/// by [`FractionalTables::compute_cross_block`], since it is used only once.
#[derive(Debug, Clone, PartialEq)]
pub struct FractionalTables {
    pub alpha: f64,
    pub k: usize,
    pub s: usize,
    pub n_total: usize,
    pub n_glue: usize,
    pub nu: usize,
    pub ratio: f64,
    pub local: DMatrix<f64>,
    pub uniform: Vec<DMatrix<f64>>,
    pub graded: Vec<DMatrix<f64>>,
    pub cross: Vec<DMatrix<f64>>,
    pub cross_deferred: bool,
    pub kernel: TailKernelConfig,
}

/// Largest number of cross blocks stored by [`build_tables`].
pub const CROSS_BLOCK_LIMIT: usize = 1 << 16;

/// Evaluation points: abscissae then the right endpoint.
fn points(rule: &QuadratureRule) -> Vec<f64> {
    rule.nodes.iter().copied().chain(std::iter::once(1.0)).collect()
}

fn kernel_block(kernel: &TailKernel, args: &[f64]) -> Result<DMatrix<f64>> {
    let s = kernel.degree_count();
    let mut block = DMatrix::zeros(args.len(), s);
    let mut row = vec![0.0; s];
    for (i, &x) in args.iter().enumerate() {
        kernel.eval_into(x, &mut row).map_err(|e| {
            Error::Sequencing(format!("history kernel argument {x} rejected: {e}"))
        })?;
        for j in 0..s {
            block[(i, j)] = row[j];
        }
    }
    Ok(block)
}

/// Scaled distance from graded interval i (0-based exponent) to the point
/// (j + c) h of the uniform part.
pub(crate) fn cross_argument(ratio: f64, nu: usize, n: usize, i: usize, j: usize, c: f64) -> f64 {
    let span = geometric_sum(ratio, nu);
    let before = geometric_sum(ratio, i);
    ((j as f64 + c) * span / n as f64 - before) / ratio.powi(i as i32)
}

/// Scaled distance between graded intervals d steps apart.
pub(crate) fn graded_argument(ratio: f64, d: usize, c: f64) -> f64 {
    geometric_sum(ratio, d) + c * ratio.powi(d as i32)
}

pub fn build_tables(
    mesh: &MixedMesh,
    rule: &QuadratureRule,
    table: &RecurrenceTable,
    cfg: TailKernelConfig,
) -> Result<FractionalTables> {
    build_tables_with_limit(mesh, rule, table, cfg, CROSS_BLOCK_LIMIT)
}

/// As [`build_tables`], deferring the cross family when it exceeds `cross_limit` blocks.
pub fn build_tables_with_limit(
    mesh: &MixedMesh,
    rule: &QuadratureRule,
    table: &RecurrenceTable,
    cfg: TailKernelConfig,
    cross_limit: usize,
) -> Result<FractionalTables> {
    if rule.alpha != table.alpha {
        return Err(Error::Domain(format!(
            "quadrature built for alpha = {} but recurrence for alpha = {}",
            rule.alpha, table.alpha
        )));
    }
    let s = rule.s;
    let kernel = TailKernel::new(table, s, cfg)?;
    let pts = points(rule);

    let mut local = DMatrix::zeros(rule.k + 1, s);
    let interior = rl_basis_matrix(rule, table, s);
    local.view_mut((0, 0), (rule.k, s)).copy_from(&interior);
    local[(rule.k, 0)] = 1.0 / gamma(rule.alpha + 1.0);

    let (n_total, n, nu, r) = (mesh.n_total, mesh.n_glue, mesh.nu, mesh.ratio);
    let uniform_count = if mesh.is_uniform() {
        n_total.saturating_sub(1)
    } else {
        n_total.saturating_sub(n + 1)
    };

    let uniform = (1..=uniform_count)
        .into_par_iter()
        .map(|d| {
            let args: Vec<f64> = pts.iter().map(|c| d as f64 + c).collect();
            kernel_block(&kernel, &args)
        })
        .collect::<Result<Vec<_>>>()?;

    let width = n_total.saturating_sub(n);
    let cross_deferred = !mesh.is_uniform() && nu * width > cross_limit;
    let (graded, cross) = if mesh.is_uniform() {
        (Vec::new(), Vec::new())
    } else {
        let graded = (1..nu)
            .into_par_iter()
            .map(|d| {
                let args: Vec<f64> = pts.iter().map(|&c| graded_argument(r, d, c)).collect();
                kernel_block(&kernel, &args)
            })
            .collect::<Result<Vec<_>>>()?;
        let cross_count = if cross_deferred { 0 } else { nu * width };
        let cross = (0..cross_count)
            .into_par_iter()
            .map(|idx| {
                let (i, j) = (idx / width, n + idx % width);
                let args: Vec<f64> = pts
                    .iter()
                    .map(|&c| cross_argument(r, nu, n, i, j, c))
                    .collect();
                kernel_block(&kernel, &args)
            })
            .collect::<Result<Vec<_>>>()?;
        (graded, cross)
    };

    Ok(FractionalTables {
        alpha: rule.alpha,
        k: rule.k,
        s,
        n_total,
        n_glue: n,
        nu,
        ratio: r,
        local,
        uniform,
        graded,
        cross,
        cross_deferred,
        kernel: cfg,
    })
}

impl FractionalTables {
    /// Kernel block for graded interval `i` (1-based) seen from uniform step `j` (n < j ≤ N).
    pub fn cross_block(&self, i: usize, j: usize) -> &DMatrix<f64> {
        let width = self.n_total - self.n_glue;
        &self.cross[(i - 1) * width + (j - 1 - self.n_glue)]
    }

    /// Evaluates the cross block (i, j) directly; `points` are the abscissae followed by 1.
    pub fn compute_cross_block(
        &self,
        kernel: &TailKernel,
        points: &[f64],
        i: usize,
        j: usize,
    ) -> Result<DMatrix<f64>> {
        let args: Vec<f64> = points
            .iter()
            .map(|&c| cross_argument(self.ratio, self.nu, self.n_glue, i - 1, j - 1, c))
            .collect();
        kernel_block(kernel, &args)
    }

    /// True when the tables were built for the given mesh.
    pub fn matches(&self, mesh: &MixedMesh) -> bool {
        self.n_total == mesh.n_total
            && self.n_glue == mesh.n_glue
            && self.nu == mesh.nu
            && self.ratio == mesh.ratio
    }
}

const CACHE_VERSION: u32 = 2;

#[derive(Serialize, Deserialize)]
struct CacheFile {
    version: u32,
    alpha: f64,
    k: usize,
    s: usize,
    #[serde(rename = "N")]
    n_total: usize,
    n: usize,
    nu: usize,
    r: f64,
    rows: usize,
    /// Row-major (k+1)×s blocks in the order local, uniform, graded, cross.
    local: Vec<f64>,
    uniform: Vec<Vec<f64>>,
    graded: Vec<Vec<f64>>,
    cross: Vec<Vec<f64>>,
    cross_deferred: bool,
    kernel: TailKernelConfig,
}

fn row_major(m: &DMatrix<f64>) -> Vec<f64> {
    let mut v = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            v.push(m[(i, j)]);
        }
    }
    v
}

fn from_row_major(rows: usize, cols: usize, v: &[f64]) -> Result<DMatrix<f64>> {
    if v.len() != rows * cols {
        return Err(Error::Cache(format!(
            "block has {} entries, expected {}",
            v.len(),
            rows * cols
        )));
    }
    Ok(DMatrix::from_row_slice(rows, cols, v))
}

/// Cache file name for a parameter set; floats are keyed by their bit patterns.
pub fn cache_file_name(alpha: f64, k: usize, s: usize, mesh: &MixedMesh) -> String {
    format!(
        "tables-v{CACHE_VERSION}-a{:016x}-k{k}-s{s}-N{}-n{}-nu{}-r{:016x}.json",
        alpha.to_bits(),
        mesh.n_total,
        mesh.n_glue,
        mesh.nu,
        mesh.ratio.to_bits()
    )
}

impl FractionalTables {
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = CacheFile {
            version: CACHE_VERSION,
            alpha: self.alpha,
            k: self.k,
            s: self.s,
            n_total: self.n_total,
            n: self.n_glue,
            nu: self.nu,
            r: self.ratio,
            rows: self.k + 1,
            local: row_major(&self.local),
            uniform: self.uniform.iter().map(row_major).collect(),
            graded: self.graded.iter().map(row_major).collect(),
            cross: self.cross.iter().map(row_major).collect(),
            cross_deferred: self.cross_deferred,
            kernel: self.kernel,
        };
        let writer = std::io::BufWriter::new(std::fs::File::create(path)?);
        serde_json::to_writer(writer, &file)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let reader = std::io::BufReader::new(std::fs::File::open(path)?);
        let file: CacheFile = serde_json::from_reader(reader)?;
        if file.version != CACHE_VERSION {
            return Err(Error::Cache(format!(
                "unsupported cache version {} (expected {CACHE_VERSION})",
                file.version
            )));
        }
        if file.rows != file.k + 1 {
            return Err(Error::Cache("row count does not match k + 1".into()));
        }
        let block = |v: &Vec<f64>| from_row_major(file.rows, file.s, v);
        Ok(Self {
            alpha: file.alpha,
            k: file.k,
            s: file.s,
            n_total: file.n_total,
            n_glue: file.n,
            nu: file.nu,
            ratio: file.r,
            local: block(&file.local)?,
            uniform: file.uniform.iter().map(block).collect::<Result<_>>()?,
            graded: file.graded.iter().map(block).collect::<Result<_>>()?,
            cross: file.cross.iter().map(block).collect::<Result<_>>()?,
            cross_deferred: file.cross_deferred,
            kernel: file.kernel,
        })
    }
}

/// Loads tables from `dir` when a matching file exists, otherwise builds and stores them.
pub fn cached_tables(
    dir: &Path,
    mesh: &MixedMesh,
    rule: &QuadratureRule,
    table: &RecurrenceTable,
    cfg: TailKernelConfig,
) -> Result<(FractionalTables, PathBuf, bool)> {
    let path = dir.join(cache_file_name(rule.alpha, rule.k, rule.s, mesh));
    if path.exists() {
        let tables = FractionalTables::load(&path)?;
        if tables.alpha == rule.alpha && tables.k == rule.k && tables.s == rule.s && tables.kernel == cfg && tables.matches(mesh) {
            return Ok((tables, path, true));
        }
    }
    std::fs::create_dir_all(dir)?;
    let tables = build_tables(mesh, rule, table, cfg)?;
    tables.save(&path)?;
    Ok((tables, path, false))
}
