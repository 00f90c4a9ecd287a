use thiserror::Error;

/// Errors surfaced by validating constructors and preconditioned operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex count must be positive")]
    EmptyGraph,
    #[error("vertex {vertex} out of range for n = {n}")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("self-pair ({0}, {0}) is not a valid query position")]
    SelfPair(usize),
    #[error("graph size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("{what} supports n <= {max}, got {n}")]
    SizeLimit { what: &'static str, max: usize, n: usize },
    #[error("epsilon must lie in (0, 1), got {0}")]
    BadEpsilon(f64),
    #[error("probability must lie in [0, 1], got {0}")]
    BadProbability(f64),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("query budget precondition violated: {0}")]
    BudgetPrecondition(String),
    #[error("hard-instance precondition violated: {0}")]
    HardInstancePrecondition(String),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
