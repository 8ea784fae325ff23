use thiserror::Error;

/// Errors produced by table construction, meshing, stepping and the bench harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid mesh parameters: {0}")]
    InvalidMesh(String),

    #[error("eigenvalue iteration did not converge for a {size}x{size} tridiagonal matrix")]
    EigenSolve { size: usize },

    #[error("singular linear system: {0}")]
    Singular(String),

    #[error("Newton iteration failed at step {step} (t = {time:e}) after {iterations} iterations, residual {residual:e}")]
    NewtonFailure {
        step: usize,
        time: f64,
        iterations: usize,
        residual: f64,
    },

    #[error("Mittag-Leffler evaluation outside the validated region: {0}")]
    AccuracyDomain(String),

    #[error("internal sequencing error: {0}")]
    Sequencing(String),

    #[error("trajectories do not share mesh nodes: {0}")]
    MismatchedNodes(String),

    #[error("unknown problem `{0}`")]
    UnknownProblem(String),

    #[error("invalid problem description: {0}")]
    ProblemSpec(String),

    #[error("table cache: {0}")]
    Cache(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
