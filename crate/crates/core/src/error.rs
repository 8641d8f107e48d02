use thiserror::Error;

/// Errors raised across the inference engine.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: left has {left} components, right has {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("summary names differ between vectors")]
    NameMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("series too short: need more than {needed} observations, got {got}")]
    SeriesTooShort { needed: usize, got: usize },

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("design matrix is rank deficient")]
    RankDeficient,

    #[error("IRLS did not converge after {iterations} iterations (last change {last_change:e})")]
    NotConverged {
        iterations: usize,
        last_change: f64,
        beta: Vec<f64>,
        sigma: f64,
    },

    #[error("optimizer did not converge: {0}")]
    OptimizerFailed(String),

    #[error("unknown parameter `{0}`")]
    UnknownParameter(String),

    #[error("simulation budget of {budget} exhausted before the first SMC iteration completed")]
    BudgetExhausted { budget: u64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("missing run label `{0}`")]
    MissingLabel(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
