use thiserror::Error;

use crate::group::GroupSpec;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("invalid group spec: {0}")]
    InvalidSpec(String),

    #[error("group spec mismatch: {left:?} vs {right:?}")]
    SpecMismatch { left: GroupSpec, right: GroupSpec },

    #[error("value {value} is not a canonical element of {spec:?}")]
    NotCanonical { spec: GroupSpec, value: i128 },

    #[error("integer window [{lo}, {hi}] overflowed by {value}")]
    WindowOverflow { lo: i64, hi: i64, value: i128 },

    #[error("operation requires a nonempty set")]
    EmptyInput,

    #[error("string length {got} does not match expected length {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("prefix length {len} out of range for strings of length {k}")]
    LengthOutOfRange { len: usize, k: usize },

    #[error("element is not in the ambient set")]
    NotInAmbient,

    #[error("index {index} out of range (size {size})")]
    IndexOutOfRange { index: usize, size: usize },

    #[error("sets differ in size: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("representation limit exceeded: {0}")]
    RepresentationLimit(String),

    #[error("not a subset: {0}")]
    NotSubset(String),

    #[error("degenerate bound: {0}")]
    DegenerateBound(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("oracle budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("malformed input: {0}")]
    Malformed(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
