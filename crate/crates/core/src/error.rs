//! Crate-wide error type.
//!
//! Diagnostics carry `f64` copies of the offending values so messages stay
//! readable regardless of the scalar type in use.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum Error {
    /// Input outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Structurally invalid input (empty data, bad sizes, unparsable spec).
    #[error("invalid input: {0}")]
    Invalid(String),

    /// A model definition failed validation (non-convex loss, b'' <= 0, ...).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// Bracket expansion exhausted without a sign change.
    #[error("no root: no sign change found, f({lo}) = {f_lo} and f({hi}) = {f_hi}")]
    NoRoot {
        lo: f64,
        hi: f64,
        f_lo: f64,
        f_hi: f64,
    },

    /// A function that must be nondecreasing on a bracket was observed to decrease.
    #[error("non-monotone objective on [{lo}, {hi}]")]
    NonMonotone { lo: f64, hi: f64 },

    /// Adaptive refinement stalled above the requested accuracy.
    #[error(
        "accuracy target {target:e} not reached: estimate {estimate:e} with error bound {error:e}"
    )]
    Accuracy {
        estimate: f64,
        error: f64,
        target: f64,
    },

    /// Catastrophic cancellation or divergence detected; result withheld.
    #[error("unstable evaluation: {0}")]
    Unstable(String),

    /// Every per-observation score is zero, so sign probabilities are undefined.
    #[error("degenerate score vector: all components are zero at z = {z}")]
    DegenerateScore { z: f64 },

    /// Rate vector contains an exact tie; closed forms divide by rate gaps.
    #[error("duplicate rates: {0}")]
    DuplicateRates(String),
}

pub type Result<T> = std::result::Result<T, Error>;
