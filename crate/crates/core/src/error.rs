use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {actual} ({context})")]
    DimensionMismatch {
        expected: usize,
        actual: usize,
        context: &'static str,
    },

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("instance parse error at {position}: {message}")]
    Parse { position: String, message: String },

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("problem size {n} exceeds enumeration limit {limit}")]
    Capacity { n: usize, limit: usize },

    #[error("every state of the {n}-bit cube is excluded")]
    Exhausted { n: usize },

    #[error("restricted master problem is infeasible; violated rows: {rows:?}")]
    RmpInfeasible { rows: Vec<usize> },

    #[error("initial columns give an infeasible master problem (violated rows {rows:?}); supply at least one feasible initial column")]
    InfeasibleInitialColumns { rows: Vec<usize> },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("numerical failure: {0}")]
    Numerical(String),
}
