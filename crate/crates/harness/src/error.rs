use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Core(#[from] ribe_core::error::Error),

    #[error("cell (estimator={estimator}, n={n}, seed={seed}) failed: {source}")]
    Cell {
        estimator: String,
        n: u64,
        seed: usize,
        #[source]
        source: ribe_core::error::Error,
    },

    #[error("{count} bound violation(s); first: {first}")]
    BoundViolated { count: usize, first: String },

    #[error("probability {value} at index {index} must be positive")]
    ZeroProbability { index: usize, value: f64 },

    #[error("moment bounds admit no distribution on the simplex")]
    InfeasibleBounds,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    /// Failures that indicate a wrong result rather than bad input.
    pub fn is_correctness_failure(&self) -> bool {
        matches!(self, HarnessError::BoundViolated { .. })
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
