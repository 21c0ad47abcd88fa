use thiserror::Error;

/// Errors raised by the core library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("negative probability mass {value} at index {index}")]
    NegativeMass { index: usize, value: f64 },

    #[error("row sums to {sum}, expected 1")]
    RowSumMismatch { sum: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("invalid radius {0}: must lie in [0, 1]")]
    InvalidRadius(f64),

    #[error("invalid ground cost: {0}")]
    InvalidCost(String),

    #[error("invalid policy: {0}")]
    InvalidPolicy(String),

    #[error("invalid discount factor {0}: must lie strictly inside (0, 1)")]
    InvalidDiscount(f64),

    #[error("linear program infeasible")]
    LpInfeasible,

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("row has no observed transitions")]
    EmptyCounts,

    #[error("side-information constraint is infeasible: {0}")]
    InfeasibleConstraint(String),

    #[error("density caps admit no distribution: sum of caps {0} < 1")]
    InfeasibleCaps(f64),

    #[error("target puts mass on next state {next} where the source row has none")]
    SupportMismatch { next: usize },

    #[error("invalid constants: {0}")]
    InvalidConstants(String),

    #[error("invalid side information: {0}")]
    InvalidSideInfo(String),

    #[error("at (s={state}, a={action}): {source}")]
    AtPair {
        state: usize,
        action: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("serialization: {0}")]
    Serialization(String),
}

impl Error {
    pub(crate) fn at(self, state: usize, action: usize) -> Self {
        Error::AtPair { state, action, source: Box::new(self) }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serialization(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
