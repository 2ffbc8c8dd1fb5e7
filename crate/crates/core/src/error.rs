use thiserror::Error;

/// Errors raised by the solver toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid interval [{lo}, {hi}]")]
    InvalidInterval { lo: f64, hi: f64 },

    #[error("degenerate box dimension {dim}: cannot normalize a zero-width interval")]
    DegenerateDimension { dim: usize },

    #[error("point component {dim} = {value} lies outside [{lo}, {hi}]")]
    OutOfBox { dim: usize, value: f64, lo: f64, hi: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("non-finite value {value} from {what} at sample {index}")]
    NonFinite { what: String, index: usize, value: f64 },

    #[error("non-finite value {value} from {what} at {point:?}")]
    NonFiniteAt { what: String, value: f64, point: Vec<f64> },

    #[error("insufficient samples for folds: {samples} samples, {folds} folds")]
    InsufficientSamples { samples: usize, folds: usize },

    #[error("quadrature with {nodes} nodes cannot resolve degree {degree}")]
    InsufficientNodes { nodes: usize, degree: usize },

    #[error("response '{response}' failed: {source}")]
    Response {
        response: String,
        #[source]
        source: Box<Error>,
    },

    #[error("budget guard: estimated {estimated} evaluations exceeds limit {limit}")]
    Budget { estimated: f64, limit: f64 },

    #[error("expression error at byte {pos}: {msg}")]
    Expression { pos: usize, msg: String },

    #[error("config error in '{field}': {msg}")]
    Config { field: String, msg: String },

    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Io(e.to_string())
    }
}
