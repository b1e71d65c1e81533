use std::fmt::Display;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{name} must be {expected}, got {got}")]
    OutOfRange {
        name: &'static str,
        expected: &'static str,
        got: String,
    },
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("distribution is not normalized: mass {mass} with certified tail {tail}")]
    Unnormalized { mass: f64, tail: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn out_of_range<T: Display>(
    name: &'static str,
    expected: &'static str,
    got: T,
) -> Error {
    Error::OutOfRange {
        name,
        expected,
        got: got.to_string(),
    }
}
