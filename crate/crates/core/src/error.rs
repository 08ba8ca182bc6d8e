use thiserror::Error;

/// Errors raised by tensor construction, the solvers and the certifiers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("tensor order must be at least {min}, got {got}")]
    OrderTooSmall { min: usize, got: usize },

    #[error("dimension {index} is zero")]
    ZeroDimension { index: usize },

    #[error("entries length {got} does not match product of dims {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("entry {index} is not finite")]
    NonFinite { index: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("tensor is not symmetric (max deviation {deviation:e})")]
    NotSymmetric { deviation: f64 },

    #[error("all dims must be equal, got {0:?}")]
    UnequalDims(Vec<usize>),

    #[error("slot {slot} out of range for order {order}")]
    SlotOutOfRange { slot: usize, order: usize },

    #[error("slots must differ, got {0} twice")]
    RepeatedSlot(usize),

    #[error("vector is not unit length (norm {norm})")]
    NotUnit { norm: f64 },

    #[error("zero vector")]
    ZeroVector,

    #[error("matrix is not orthogonal (max deviation {deviation:e})")]
    NotOrthogonal { deviation: f64 },

    #[error("not an eigen-object: residual {residual:e} exceeds tolerance {tol:e}")]
    ResidualTooLarge { residual: f64, tol: f64 },

    #[error("operation requires n = 2, got n = {0}")]
    RequiresN2(usize),

    #[error("invalid odeco spec: {0}")]
    InvalidSpec(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid tolerance {0}")]
    InvalidTolerance(f64),

    #[error("binary form is identically zero")]
    IdenticallyZero,
}

pub type Result<T> = std::result::Result<T, TensorError>;
