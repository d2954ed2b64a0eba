use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{what}: n = {n} exceeds the enumeration cap of {cap}")]
    Capacity { what: &'static str, n: usize, cap: usize },

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("index {index} out of range for dimension {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("table length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("invalid partition: {0}")]
    InvalidPartition(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("negative entry {value} at position {index}")]
    NegativeEntry { index: usize, value: f64 },

    #[error("matrix is not nonnegative definite (smallest eigenvalue {0:e})")]
    Indefinite(f64),

    #[error("Dobrushin condition fails (rho = {0}); refusing to pick a burn-in schedule")]
    NotDobrushin(f64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("calibration infeasible: {0}")]
    CalibrationInfeasible(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
