//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),
    /// An input object violates a structural invariant.
    #[error("validation error: {0}")]
    Validation(String),
    /// A requested target cannot be reached (e.g. more value than exists).
    #[error("unreachable: {0}")]
    Unreachable(String),
    /// The input is degenerate for the requested computation.
    #[error("degenerate input: {0}")]
    Degenerate(String),
    /// The request cannot be satisfied with the given parameters.
    #[error("infeasible: {0}")]
    Infeasible(String),
    /// The request would exceed a hard size limit.
    #[error("too large: {0}")]
    TooLarge(String),
}

pub type Result<T> = std::result::Result<T, Error>;
