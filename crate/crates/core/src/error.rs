use alloc::string::String;

/// Errors raised by the core algorithms.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("arity mismatch: expected {expected} features, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("unsupported penalty: {0} instability is not twice differentiable")]
    UnsupportedPenalty(&'static str),
    #[error("hessian sum is zero")]
    ZeroHessian,
    #[error("invalid tree: {0}")]
    InvalidTree(String),
}

pub type Result<T> = core::result::Result<T, Error>;
