use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use fhbvm::bench::spec_file::resolve_problem;
use fhbvm::bench::{self, GridPoint, ReferenceRecipe, WpdRecord};
use fhbvm::fractional::{cached_tables, TailKernelConfig};
use fhbvm::mesh::build_mixed_mesh;
use fhbvm::quadrature::{gauss_jacobi_rule, jacobi_recurrence};
use fhbvm::stability::{region_boundary, GridSpec};
use fhbvm::{Error, Result, SolverConfig};

#[derive(Parser)]
#[command(name = "fhbvm", version, about = "Collocation solvers for Caputo fractional initial value problems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one problem on a mixed mesh and write CSV/JSON output.
    Solve {
        /// Registry name (problem1..problem4) or path to a JSON problem file.
        #[arg(long)]
        problem: String,
        /// Final time; defaults to the problem's own.
        #[arg(long = "T")]
        t_final: Option<f64>,
        #[arg(long = "N")]
        n_total: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        nu: usize,
        #[arg(long, default_value_t = 22)]
        s: usize,
        #[arg(long, default_value_t = 22)]
        k: usize,
        #[arg(long)]
        out: PathBuf,
        /// Directory for precomputed fractional tables.
        #[arg(long)]
        cache: Option<PathBuf>,
    },
    /// Work-precision sweep written as CSV.
    Wpd {
        #[arg(long)]
        problem: String,
        /// JSON array of grid points; defaults to the problem's own grid.
        #[arg(long)]
        grid: Option<PathBuf>,
        /// `exact`, `fine:<factor>`, or `default` for the problem's recipe.
        #[arg(long = "ref", default_value = "default")]
        reference: String,
        /// Output CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample |R| and |E_alpha| on a grid and extract the unit level sets.
    Stability {
        #[arg(long)]
        s: usize,
        #[arg(long)]
        alpha: f64,
        /// `<width>x<height>`.
        #[arg(long, default_value = "800x800")]
        grid: String,
        /// `re0,re1,im0,im1`.
        #[arg(long, default_value = "-15,5,-10,10", allow_hyphen_values = true)]
        window: String,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Precompute fractional tables into a cache directory.
    Tables {
        #[arg(long)]
        cache: PathBuf,
        /// Takes alpha (and the default T) from a registry problem or file.
        #[arg(long, required_unless_present = "alpha")]
        problem: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long = "T")]
        t_final: Option<f64>,
        #[arg(long = "N")]
        n_total: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        nu: usize,
        #[arg(long, default_value_t = 22)]
        s: usize,
        #[arg(long, default_value_t = 22)]
        k: usize,
    },
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Domain(_) => "domain",
        Error::InvalidMesh(_) => "invalid_mesh",
        Error::EigenSolve { .. } => "eigen_solve",
        Error::Singular(_) => "singular",
        Error::NewtonFailure { .. } => "newton_failure",
        Error::AccuracyDomain(_) => "accuracy_domain",
        Error::Sequencing(_) => "sequencing",
        Error::MismatchedNodes(_) => "mismatched_nodes",
        Error::UnknownProblem(_) => "unknown_problem",
        Error::ProblemSpec(_) => "problem_spec",
        Error::Cache(_) => "cache",
        Error::Io(_) => "io",
        Error::Json(_) => "json",
    }
}

fn parse_reference(text: &str, default: ReferenceRecipe) -> Result<ReferenceRecipe> {
    match text {
        "default" => Ok(default),
        "exact" => Ok(ReferenceRecipe::Exact),
        _ => text
            .strip_prefix("fine:")
            .and_then(|f| f.parse::<usize>().ok())
            .filter(|&f| f >= 2)
            .map(|factor| ReferenceRecipe::Fine { factor })
            .ok_or_else(|| Error::Domain(format!("--ref must be exact, default or fine:<factor >= 2>, got {text}"))),
    }
}

fn parse_grid(text: &str) -> Result<(usize, usize)> {
    let (w, h) = text
        .split_once('x')
        .ok_or_else(|| Error::Domain(format!("--grid must look like 800x800, got {text}")))?;
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|_| Error::Domain(format!("bad grid size {text}")))
    };
    Ok((parse(w)?, parse(h)?))
}

fn parse_window(text: &str) -> Result<[f64; 4]> {
    let values: Vec<f64> = text
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::Domain(format!("bad window {text}")))?;
    values
        .try_into()
        .map_err(|_| Error::Domain(format!("--window needs four numbers, got {text}")))
}

fn execute(cli: Cli) -> Result<serde_json::Value> {
    match cli.command {
        Command::Solve {
            problem,
            t_final,
            n_total,
            n,
            nu,
            s,
            k,
            out,
            cache,
        } => {
            let bench = resolve_problem(&problem)?;
            let grid = GridPoint {
                t_final: t_final.unwrap_or(bench.t_final),
                n_total,
                n,
                nu,
                s,
                k,
            };
            let config = SolverConfig::default();
            let output = bench::run_with_cache(&bench.problem, &grid, &config, cache.as_deref())?;
            let mescd = match bench.reference {
                ReferenceRecipe::Exact => {
                    Some(bench::score_run(&bench, &grid, &output, &ReferenceRecipe::Exact, None, &config)?)
                }
                _ => None,
            };
            let record = WpdRecord {
                index: 0,
                problem: bench.name.clone(),
                grid,
                nodes: output.mesh.node_count(),
                precompute_seconds: output.precompute_seconds,
                solve_seconds: output.solve_seconds,
                mescd,
                error: None,
            };
            bench::write_run(&out, &bench.name, &output, Some(&record))?;
            Ok(json!({
                "mesh": output.mesh.echo(),
                "final_value": output.trajectory.last_value(),
                "record": record,
                "csv": out.join(format!("{}.csv", bench.name)),
            }))
        }
        Command::Wpd {
            problem,
            grid,
            reference,
            out,
        } => {
            let bench = resolve_problem(&problem)?;
            let points: Vec<GridPoint> = match grid {
                Some(path) => serde_json::from_str(&std::fs::read_to_string(&path)?)?,
                None => bench.grid.clone(),
            };
            let recipe = parse_reference(&reference, bench.reference)?;
            let rows = bench::wpd(&bench, &points, &recipe, &SolverConfig::default())?;
            match &out {
                Some(path) => bench::write_wpd_csv(&rows, std::fs::File::create(path)?)?,
                None => bench::write_wpd_csv(&rows, std::io::stdout().lock())?,
            }
            let failed = rows.iter().filter(|r| r.error.is_some()).count();
            Ok(json!({ "rows": rows.len(), "failed": failed, "csv": out }))
        }
        Command::Stability {
            s,
            alpha,
            grid,
            window,
            out,
        } => {
            let (width, height) = parse_grid(&grid)?;
            let [re_min, re_max, im_min, im_max] = parse_window(&window)?;
            let spec = GridSpec {
                width,
                height,
                re_min,
                re_max,
                im_min,
                im_max,
            };
            let data = region_boundary(s, alpha, spec)?;
            std::fs::create_dir_all(&out)?;
            let stem = format!("stability-s{s}-a{alpha}");
            let samples = out.join(format!("{stem}-samples.csv"));
            let boundary = out.join(format!("{stem}-boundary.csv"));
            data.write_samples_csv(std::io::BufWriter::new(std::fs::File::create(&samples)?))?;
            data.write_boundary_csv(std::io::BufWriter::new(std::fs::File::create(&boundary)?))?;
            Ok(json!({
                "samples": samples,
                "boundary": boundary,
                "r_segments": data.r_boundary.len(),
                "e_segments": data.e_boundary.len(),
            }))
        }
        Command::Tables {
            cache,
            problem,
            alpha,
            t_final,
            n_total,
            n,
            nu,
            s,
            k,
        } => {
            let bench = problem.as_deref().map(resolve_problem).transpose()?;
            let alpha = alpha
                .or(bench.as_ref().map(|b| b.problem.alpha))
                .ok_or_else(|| Error::Domain("need --alpha or --problem".into()))?;
            let t_final = t_final
                .or(bench.as_ref().map(|b| b.t_final))
                .ok_or_else(|| Error::Domain("need --T or --problem".into()))?;
            let mesh = build_mixed_mesh(t_final, n_total, n, nu)?;
            let recurrence = jacobi_recurrence(alpha, k.max(s))?;
            let rule = gauss_jacobi_rule(&recurrence, k, s)?;
            let (_, path, hit) = cached_tables(&cache, &mesh, &rule, &recurrence, TailKernelConfig::default())?;
            Ok(json!({ "path": path, "cached": hit, "mesh": mesh.echo() }))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let csv_on_stdout = matches!(cli.command, Command::Wpd { out: None, .. });
    match execute(cli) {
        Ok(summary) => {
            if csv_on_stdout {
                eprintln!("{summary}");
            } else {
                let _ = writeln!(std::io::stdout().lock(), "{summary}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            let diag = json!({ "error": error_kind(&e), "message": e.to_string() });
            eprintln!("{diag}");
            ExitCode::FAILURE
        }
    }
}
