//! Exact arithmetic for the residues of the descent statistic modulo `b`.
//!
//! The crate is split along the lines of the computation:
//!
//! * [`eulerian`] builds the Eulerian triangle with big integers, the exact
//!   descent law and its residue probabilities, and the Bernoulli closed form
//!   for `b = 2`.
//! * [`poisson_tp`] evaluates Poisson and translated Poisson laws, their
//!   residue probabilities (direct summation and roots of unity) and the
//!   associated deviation bounds.
//! * [`stein_pair`] implements the move-to-end exchangeable pair on
//!   permutations together with exhaustive and Monte Carlo moment checks.
//! * [`bounds`] holds the closed-form right-hand sides.
//! * [`distance`] computes total variation distances with certified
//!   truncation error.

mod enumerate;
mod error;

pub mod bounds;
pub mod distance;
pub mod eulerian;
pub mod poisson_tp;
pub mod stein_pair;

pub use error::{Error, Result};

/// Exact rational used throughout the crate.
pub type Rational = num_rational::BigRational;
