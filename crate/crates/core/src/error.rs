use thiserror::Error;

/// Errors produced by inference, data generation and experiment plumbing.
#[derive(Debug, Error)]
pub enum Error {
    /// Block Cholesky factorisation failed at the given chain index.
    #[error("precision is not positive definite at chain block {block}")]
    NotPositiveDefinite { block: usize },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("ELBO decreased by {decrease:.3e} (from {before:.6e}) after `{update}` in sweep {sweep}")]
    NonMonotone {
        update: &'static str,
        sweep: usize,
        before: f64,
        decrease: f64,
    },

    #[error("stability bound violated: {0}")]
    Unstable(String),

    #[error("infeasible mask plan: {0}")]
    InfeasibleMask(String),

    #[error("empty test set")]
    EmptyTestSet,

    #[error("{0}")]
    Unsupported(String),

    #[error("checkpoint schema version {found} is not supported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },

    #[error("malformed input: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Toml(#[from] toml::de::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
