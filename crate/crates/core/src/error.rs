use thiserror::Error;

/// Errors produced by the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operator is not self-adjoint (deviation {deviation:e})")]
    NotSelfAdjoint { deviation: f64 },

    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    #[error("linear system is singular")]
    Singular,

    #[error("iteration did not converge within {iterations} steps")]
    NotConverged { iterations: usize },

    #[error("series diverges: increment {increment:e} after {iterations} terms (initial {initial:e})")]
    Divergence {
        iterations: usize,
        increment: f64,
        initial: f64,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("rate index {index} is outside the explicit list of length {len}")]
    RateOutOfRange { index: usize, len: usize },

    #[error("index {index} outside represented range {limit}")]
    OutOfRange { index: usize, limit: usize },

    #[error("truncation bias {bias:e} exceeds standard error {standard_error:e}")]
    BiasCheck { bias: f64, standard_error: f64 },

    #[error("kernel support {extent} plus tail margin {margin} exceeds domain cutoff {cutoff}")]
    TailControl {
        extent: f64,
        margin: f64,
        cutoff: f64,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
