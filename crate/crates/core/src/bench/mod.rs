//! Benchmark harness: problem registry, the mescd accuracy metric, single
//! runs and work–precision sweeps.

pub mod problems;
pub mod spec_file;

use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fractional::{cached_tables, TailKernelConfig};
use crate::quadrature::{gauss_jacobi_rule, jacobi_recurrence};
use crate::mesh::{build_mixed_mesh, MixedMesh};
use crate::solver::{Discretization, ProblemSpec, SolutionTrajectory, SolverConfig};

pub use problems::{registry, BenchProblem, GridPoint, ReferenceRecipe};

/// Digits reported for exact agreement.
pub const MESCD_CAP: f64 = 16.0;

/// max{0, −log10 max_i ‖(ȳ_i − y_i)./(1 + |ȳ_i|)‖∞}, capped at 16.
pub fn mescd(computed: &[Vec<f64>], reference: &[Vec<f64>]) -> Result<f64> {
    if computed.len() != reference.len() {
        return Err(Error::MismatchedNodes(format!(
            "{} computed nodes against {} reference nodes",
            computed.len(),
            reference.len()
        )));
    }
    let mut worst = 0.0f64;
    for (y, yref) in computed.iter().zip(reference) {
        if y.len() != yref.len() {
            return Err(Error::MismatchedNodes("state dimensions differ".into()));
        }
        for (v, r) in y.iter().zip(yref) {
            let e = (r - v).abs() / (1.0 + r.abs());
            if e.is_nan() {
                return Ok(0.0);
            }
            worst = worst.max(e);
        }
    }
    Ok(score(worst))
}

fn score(worst: f64) -> f64 {
    if worst == 0.0 {
        MESCD_CAP
    } else {
        (-worst.log10()).clamp(0.0, MESCD_CAP)
    }
}

/// mescd restricted to the nodes the two trajectories share.
///
/// Times are matched within `1e-10·max(1, T)`; the final nodes must match.
pub fn mescd_common(
    times: &[f64],
    values: &[Vec<f64>],
    ref_times: &[f64],
    ref_values: &[Vec<f64>],
) -> Result<f64> {
    let (Some(&end), Some(&ref_end)) = (times.last(), ref_times.last()) else {
        return Err(Error::MismatchedNodes("empty trajectory".into()));
    };
    let tol = 1e-10 * end.abs().max(1.0);
    if (end - ref_end).abs() > tol {
        return Err(Error::MismatchedNodes(format!(
            "trajectories end at {end} and {ref_end}"
        )));
    }
    let mut a = Vec::new();
    let mut b = Vec::new();
    let mut j = 0;
    for (i, &t) in times.iter().enumerate() {
        while j < ref_times.len() && ref_times[j] < t - tol {
            j += 1;
        }
        if j < ref_times.len() && (ref_times[j] - t).abs() <= tol {
            a.push(values[i].clone());
            b.push(ref_values[j].clone());
        }
    }
    mescd(&a, &b)
}

/// Trajectory plus timings of one run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub mesh: MixedMesh,
    pub trajectory: SolutionTrajectory,
    /// Rule and table construction.
    pub precompute_seconds: f64,
    /// The step loop only.
    pub solve_seconds: f64,
}

pub fn run(problem: &ProblemSpec, grid: &GridPoint, config: &SolverConfig) -> Result<RunOutput> {
    run_with_cache(problem, grid, config, None)
}

/// Like [`run`], reading and writing fractional tables under `cache_dir`.
pub fn run_with_cache(
    problem: &ProblemSpec,
    grid: &GridPoint,
    config: &SolverConfig,
    cache_dir: Option<&Path>,
) -> Result<RunOutput> {
    let mesh = build_mixed_mesh(grid.t_final, grid.n_total, grid.n, grid.nu)?;
    let start = Instant::now();
    let kernel = TailKernelConfig::default();
    let disc = match cache_dir {
        None => Discretization::new(problem.alpha, grid.k, grid.s, &mesh, kernel)?,
        Some(dir) => {
            let recurrence = jacobi_recurrence(problem.alpha, grid.k.max(grid.s))?;
            let rule = gauss_jacobi_rule(&recurrence, grid.k, grid.s)?;
            let (tables, _, _) = cached_tables(dir, &mesh, &rule, &recurrence, kernel)?;
            Discretization {
                recurrence,
                rule,
                tables,
            }
        }
    };
    let precompute_seconds = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let trajectory = disc.solve(problem, &mesh, config)?;
    let solve_seconds = start.elapsed().as_secs_f64();
    Ok(RunOutput {
        mesh,
        trajectory,
        precompute_seconds,
        solve_seconds,
    })
}

/// Writes `<stem>.csv` and `<stem>.json` into `dir`.
pub fn write_run(dir: &Path, stem: &str, output: &RunOutput, record: Option<&WpdRecord>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let csv = std::fs::File::create(dir.join(format!("{stem}.csv")))?;
    output.trajectory.write_csv(std::io::BufWriter::new(csv))?;
    let mut json = output.trajectory.to_json(&output.mesh);
    json["precompute_seconds"] = output.precompute_seconds.into();
    json["solve_seconds"] = output.solve_seconds.into();
    if let Some(r) = record {
        json["record"] = serde_json::to_value(r)?;
    }
    std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&json)?)?;
    Ok(())
}

/// One row of a work–precision diagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WpdRecord {
    pub index: usize,
    pub problem: String,
    pub grid: GridPoint,
    pub nodes: usize,
    pub precompute_seconds: f64,
    pub solve_seconds: f64,
    pub mescd: Option<f64>,
    pub error: Option<String>,
}

/// Accuracy of a finished run against the recipe.
pub fn score_run(
    bench: &BenchProblem,
    point: &GridPoint,
    output: &RunOutput,
    recipe: &ReferenceRecipe,
    fixed: Option<&RunOutput>,
    config: &SolverConfig,
) -> Result<f64> {
    let traj = &output.trajectory;
    match recipe {
        ReferenceRecipe::Exact => {
            let exact = bench
                .exact
                .as_ref()
                .ok_or_else(|| Error::ProblemSpec(format!("{} has no exact solution", bench.name)))?;
            let reference: Vec<Vec<f64>> = traj.times.iter().map(|&t| exact(t)).collect();
            mescd(&traj.values, &reference)
        }
        ReferenceRecipe::Fine { factor } => {
            let fine = GridPoint {
                n_total: point.n_total * factor,
                ..*point
            };
            let reference = run(&bench.problem, &fine, config)?;
            mescd_common(
                &traj.times,
                &traj.values,
                &reference.trajectory.times,
                &reference.trajectory.values,
            )
        }
        ReferenceRecipe::Fixed { .. } => {
            let reference = fixed.ok_or_else(|| Error::Sequencing("fixed reference not computed".into()))?;
            mescd_common(
                &traj.times,
                &traj.values,
                &reference.trajectory.times,
                &reference.trajectory.values,
            )
        }
    }
}

/// Runs every grid point (in parallel) and scores it against the recipe.
/// Failed rows carry the error message; rows come back in grid order.
pub fn wpd(
    bench: &BenchProblem,
    grid: &[GridPoint],
    recipe: &ReferenceRecipe,
    config: &SolverConfig,
) -> Result<Vec<WpdRecord>> {
    let fixed = match recipe {
        ReferenceRecipe::Fixed { grid } => Some(run(&bench.problem, grid, config)?),
        _ => None,
    };
    let mut rows: Vec<WpdRecord> = grid
        .par_iter()
        .enumerate()
        .map(|(index, point)| {
            let mut record = WpdRecord {
                index,
                problem: bench.name.clone(),
                grid: *point,
                nodes: 0,
                precompute_seconds: 0.0,
                solve_seconds: 0.0,
                mescd: None,
                error: None,
            };
            match run(&bench.problem, point, config) {
                Ok(output) => {
                    record.nodes = output.mesh.node_count();
                    record.precompute_seconds = output.precompute_seconds;
                    record.solve_seconds = output.solve_seconds;
                    match score_run(bench, point, &output, recipe, fixed.as_ref(), config) {
                        Ok(m) => record.mescd = Some(m),
                        Err(e) => record.error = Some(e.to_string()),
                    }
                }
                Err(e) => record.error = Some(e.to_string()),
            }
            record
        })
        .collect();
    rows.sort_by_key(|r| r.index);
    Ok(rows)
}

pub const WPD_HEADER: &str = "index,problem,T,N,n,nu,s,k,nodes,precompute_s,solve_s,mescd,error";

pub fn write_wpd_csv<W: Write>(rows: &[WpdRecord], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{WPD_HEADER}")?;
    for r in rows {
        let g = &r.grid;
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{:.6},{:.6},{},{}",
            r.index,
            r.problem,
            g.t_final,
            g.n_total,
            g.n,
            g.nu,
            g.s,
            g.k,
            r.nodes,
            r.precompute_seconds,
            r.solve_seconds,
            r.mescd.map(|m| format!("{m:.4}")).unwrap_or_default(),
            r.error.as_deref().unwrap_or("").replace([',', '\n'], ";"),
        )?;
    }
    Ok(())
}
