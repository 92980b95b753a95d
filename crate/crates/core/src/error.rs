use alloc::string::String;

/// Errors raised by the estimation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("an atom with the same center and scale is already at index {0}")]
    DuplicateAtom(usize),

    #[error("scale must be positive and finite, got {0}")]
    InvalidScale(f64),

    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(&'static str),

    #[error("matrix is numerically singular (reciprocal condition {0:e})")]
    IllConditioned(f64),

    #[error("dictionary is empty")]
    EmptyDictionary,

    #[error("no sample points supplied")]
    EmptySamples,

    #[error("index {index} out of range for size {size}")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("index {0} appears twice in the subset")]
    DuplicateIndex(usize),

    #[error("function has zero norm")]
    ZeroNorm,

    #[error("Gram inverse is not available")]
    MissingInverse,

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T> = core::result::Result<T, Error>;
