use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not positive definite (pivot {pivot} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },

    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("graph contains a directed cycle")]
    CycleDetected,

    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("variable sets differ")]
    VariableMismatch,

    #[error("arc {from}->{to} is not covered")]
    ArcNotCovered { from: usize, to: usize },

    #[error("{what} = {value} exceeds the limit {limit}")]
    TooLarge { what: &'static str, value: usize, limit: usize },

    #[error("invalid degrees of freedom {dof} for dimension {dim} (need dof > dim - 1)")]
    InvalidDegreesOfFreedom { dim: usize, dof: f64 },

    #[error("subset is empty")]
    EmptySubset,

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("sample size {n} is below the minimum {min}")]
    SampleTooSmall { n: usize, min: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("missing value at row {row}, column {column}")]
    MissingValue { row: usize, column: usize },

    #[error("non-finite value at row {row}, column {column}")]
    NonFinite { row: usize, column: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::NotPositiveDefinite { .. })
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
