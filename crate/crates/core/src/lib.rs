//! Sampling-distribution estimates for maximum likelihood estimators of
//! one-parameter models with a strictly convex negative log-likelihood.
//!
//! The central object is the per-observation loss `l(x; theta) = -log f(x; theta)`.
//! When `l` is strictly convex in `theta`, the event "the MLE is at most `z`"
//! coincides with "the mean score at `z` is nonnegative", which turns the
//! sampling distribution of the MLE into a question about the first two
//! moments of the score. [`asymptotic::refined_cdf`] evaluates the resulting
//! estimate, and [`wlb`] carries the same idea over to the weighted
//! likelihood bootstrap, where the score-sign probability has an exact
//! closed form in terms of hypoexponential blocks.
//!
//! Scalar types are generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! at the crate root pin the common case.

// Numeric tables keep every published digit even past f64 resolution, and
// negated float comparisons (`!(x > lo)`) are NaN-rejecting guards on purpose.
#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod asymptotic;
pub mod curve;
pub mod error;
pub mod mle;
pub mod models;
pub mod moments;
pub mod numerics;
pub mod wlb;

pub use error::{Error, Result};

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, NumCast};

/// Floating-point scalar the numerical routines are generic over.
///
/// Implemented for `f32` and `f64`. Random draws are always generated in
/// `f64` and converted, so a given seed yields the same sequence (up to
/// rounding) for every scalar type.
pub trait Real: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {
    /// Shorthand for converting an `f64` constant.
    fn of(x: f64) -> Self {
        <Self as NumCast>::from(x).expect("finite f64 converts to any Real")
    }

    fn to_f64_lossy(self) -> f64 {
        num_traits::ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

pub type Grid64 = numerics::Grid<f64>;
pub type CdfCurve64 = curve::CdfCurve<f64>;
pub type DensityCurve64 = curve::DensityCurve<f64>;
pub type ScoreMoments64 = moments::ScoreMoments<f64>;
pub type Dataset64 = mle::Dataset<f64>;
pub type WeightVector64 = mle::WeightVector<f64>;
