use thiserror::Error;

/// Errors raised by state validation, protocol construction and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),

    #[error("matrix is not square: {0}x{1}")]
    NotSquare(usize, usize),

    #[error("not Hermitian (max |M - M†| = {0:e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("not positive semi-definite (min eigenvalue {0:e})")]
    NotPositive(f64),

    #[error("not unitary (‖U†U - I‖_F = {0:e})")]
    NotUnitary(f64),

    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),

    #[error("index out of range: {name} = {value}, must be < {bound}")]
    OutOfRange {
        name: &'static str,
        value: usize,
        bound: usize,
    },

    #[error("not an RSP-equation solution (completeness defect {defect:e})")]
    NotRspSolution { defect: f64 },

    #[error("outcome has zero probability (m = {0})")]
    ZeroProbabilityOutcome(usize),

    #[error("state outside sub-ensemble (|χz| = {0:e})")]
    OutsideSubEnsemble(f64),

    #[error("malformed {field}: {reason}")]
    Malformed { field: String, reason: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
