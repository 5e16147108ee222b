//! Generic natural exponential families.
//!
//! Density: f(x; theta) = c(x) exp(theta t(x) - b(theta)), so the loss is
//! l(x; theta) = b(theta) - theta t(x) - ln c(x), the score derivative is
//! b'(theta) - t(x), and strict convexity is exactly b'' > 0. The moment
//! structure collapses to D = b'(z) - b'(theta*) and V = b''(theta*) + D^2,
//! which is what makes these families the reference path for testing the
//! generic machinery.

use super::{check_datum, check_param, Interval, Model};
use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::Real;

pub struct ExpFamSpec<T> {
    /// Short name; the model id becomes `expfam:<name>`.
    pub name: String,
    pub param_support: Interval<T>,
    pub data_support: Interval<T>,
    /// Sufficient statistic t(x).
    pub suff_stat: fn(T) -> T,
    /// ln c(x).
    pub log_base: fn(T) -> T,
    /// Log-partition b and derivatives. b3 is optional; without it the
    /// model reports no closed-form curvature partials.
    pub b: fn(T) -> T,
    pub b1: fn(T) -> T,
    pub b2: fn(T) -> T,
    pub b3: Option<fn(T) -> T>,
    /// Exact sampler, if the family has one.
    pub sampler: Option<fn(T, &mut RngStream) -> T>,
    /// Closed-form MLE, if the family has one.
    pub mle: Option<fn(&[T]) -> T>,
}

pub struct ExpFamModel<T> {
    spec: ExpFamSpec<T>,
    id: String,
}

/// Validate and wrap an exponential-family spec as a model.
///
/// Validation probes b'' at points spanning the parameter window and
/// rejects the spec if any value fails to be strictly positive, since every
/// downstream guarantee rides on that curvature.
pub fn model_from_expfam<T: Real>(spec: ExpFamSpec<T>) -> Result<ExpFamModel<T>> {
    if !(spec.param_support.lo < spec.param_support.hi) {
        return Err(Error::InvalidModel(format!(
            "expfam:{} has empty parameter support",
            spec.name
        )));
    }
    let (lo, hi) = spec.param_support.probe_window();
    let probes = 17;
    for i in 0..probes {
        let f = T::of(i as f64) / T::of((probes - 1) as f64);
        let theta = lo + (hi - lo) * f;
        let curv = (spec.b2)(theta);
        if !(curv > T::zero()) || !curv.is_finite() {
            return Err(Error::InvalidModel(format!(
                "expfam:{} has b''({theta}) = {curv}; strict convexity requires b'' > 0",
                spec.name
            )));
        }
    }
    let id = format!("expfam:{}", spec.name);
    Ok(ExpFamModel { spec, id })
}

impl<T: Real> Model<T> for ExpFamModel<T> {
    fn id(&self) -> String {
        self.id.clone()
    }

    fn param_support(&self) -> Interval<T> {
        self.spec.param_support
    }

    fn data_support(&self) -> Interval<T> {
        self.spec.data_support
    }

    fn loss(&self, x: T, theta: T) -> Result<T> {
        check_datum(self, x)?;
        check_param(self, theta)?;
        Ok((self.spec.b)(theta) - theta * (self.spec.suff_stat)(x) - (self.spec.log_base)(x))
    }

    fn score_deriv(&self, x: T, theta: T) -> Result<T> {
        check_datum(self, x)?;
        check_param(self, theta)?;
        Ok((self.spec.b1)(theta) - (self.spec.suff_stat)(x))
    }

    fn sample(&self, theta: T, rng: &mut RngStream) -> Result<T> {
        check_param(self, theta)?;
        match self.spec.sampler {
            Some(s) => Ok(s(theta, rng)),
            None => Err(Error::Invalid(format!("{} defines no sampler", self.id))),
        }
    }

    fn closed_form_mle(&self, obs: &[T]) -> Option<T> {
        self.spec.mle.map(|m| m(obs))
    }

    fn closed_form_fisher(&self, theta: T) -> Option<T> {
        Some((self.spec.b2)(theta))
    }

    fn closed_form_moments(&self, z: T, theta_star: T) -> Option<(T, T)> {
        let d = (self.spec.b1)(z) - (self.spec.b1)(theta_star);
        let curv = (self.spec.b2)(theta_star);
        if !(curv > T::zero()) {
            return None;
        }
        Some((d, curv + d * d))
    }

    fn closed_form_partials(&self, theta_star: T) -> Option<(T, T, T)> {
        let b3 = self.spec.b3?;
        Some(((self.spec.b2)(theta_star), b3(theta_star), T::zero()))
    }
}

fn neg<T: Real>(x: T) -> T {
    -x
}

fn zero_fn<T: Real>(_: T) -> T {
    T::zero()
}

fn neg_ln<T: Real>(x: T) -> T {
    -x.ln()
}

fn ln_fn<T: Real>(x: T) -> T {
    x.ln()
}

fn recip_neg<T: Real>(x: T) -> T {
    -x.recip()
}

fn recip_sq<T: Real>(x: T) -> T {
    (x * x).recip()
}

fn recip_cube_neg2<T: Real>(x: T) -> T {
    T::of(-2.0) / (x * x * x)
}

fn exp_sample<T: Real>(theta: T, rng: &mut RngStream) -> T {
    rng.standard_exp::<T>() / theta
}

fn exp_mle<T: Real>(obs: &[T]) -> T {
    let n = T::of(obs.len() as f64);
    (obs.iter().fold(T::zero(), |a, &x| a + x) / n).recip()
}

fn power_sample<T: Real>(theta: T, rng: &mut RngStream) -> T {
    rng.uniform::<T>().powf(theta.recip())
}

fn power_mle<T: Real>(obs: &[T]) -> T {
    let n = T::of(obs.len() as f64);
    -n / obs.iter().fold(T::zero(), |a, &x| a + x.ln())
}

/// Named specs mirroring built-in families through the generic path:
/// `exponential` (t = -x) and `power` (t = ln x).
pub fn expfam_spec<T: Real>(name: &str) -> Result<ExpFamSpec<T>> {
    match name {
        "exponential" => Ok(ExpFamSpec {
            name: "exponential".into(),
            param_support: Interval::open_positive(),
            data_support: Interval::open_positive(),
            suff_stat: neg::<T>,
            log_base: zero_fn::<T>,
            b: neg_ln::<T>,
            b1: recip_neg::<T>,
            b2: recip_sq::<T>,
            b3: Some(recip_cube_neg2::<T>),
            sampler: Some(exp_sample::<T>),
            mle: Some(exp_mle::<T>),
        }),
        "power" => Ok(ExpFamSpec {
            name: "power".into(),
            param_support: Interval::open_positive(),
            data_support: Interval::unit(),
            suff_stat: ln_fn::<T>,
            log_base: neg_ln::<T>,
            b: neg_ln::<T>,
            b1: recip_neg::<T>,
            b2: recip_sq::<T>,
            b3: Some(recip_cube_neg2::<T>),
            sampler: Some(power_sample::<T>),
            mle: Some(power_mle::<T>),
        }),
        _ => Err(Error::Invalid(format!(
            "unknown exponential-family spec {name:?}; expected exponential or power"
        ))),
    }
}
