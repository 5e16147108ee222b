//! Built-in model families.
//!
//! Each implements the loss, its parameter derivative, and an exact sampler,
//! plus whatever closed forms the family admits. Losses are written in
//! forms that stay finite over the whole open supports; the comments on the
//! tricky ones say which limit they are protecting.

use super::{check_datum, check_param, Interval, Model};
use crate::error::Result;
use crate::numerics::special::{inv_mills, ln_std_normal_cdf};
use crate::numerics::RngStream;
use crate::Real;

const LN_SQRT_TWO_PI: f64 = 0.918_938_533_204_672_74;

/// Exponential with rate theta: f(x; theta) = theta exp(-x theta) on x > 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct Exponential;

impl<T: Real> Model<T> for Exponential {
    fn id(&self) -> String {
        "exponential".into()
    }

    fn param_support(&self) -> Interval<T> {
        Interval::open_positive()
    }

    fn data_support(&self) -> Interval<T> {
        Interval::open_positive()
    }

    fn loss(&self, x: T, theta: T) -> Result<T> {
        check_datum(self, x)?;
        check_param(self, theta)?;
        Ok(x * theta - theta.ln())
    }

    fn score_deriv(&self, x: T, theta: T) -> Result<T> {
        check_datum(self, x)?;
        check_param(self, theta)?;
        Ok(x - theta.recip())
    }

    fn sample(&self, theta: T, rng: &mut RngStream) -> Result<T> {
        check_param(self, theta)?;
        Ok(rng.standard_exp::<T>() / theta)
    }

    fn closed_form_mle(&self, obs: &[T]) -> Option<T> {
        let n = T::of(obs.len() as f64);
        let mean = obs.iter().fold(T::zero(), |a, &x| a + x) / n;
        Some(mean.recip())
    }

    fn closed_form_fisher(&self, theta: T) -> Option<T> {
        Some((theta * theta).recip())
    }

    fn closed_form_moments(&self, z: T, theta_star: T) -> Option<(T, T)> {
        let d = theta_star.recip() - z.recip();
        Some((d, (theta_star * theta_star).recip() + d * d))
    }

    fn closed_form_partials(&self, theta_star: T) -> Option<(T, T, T)> {
        let t2 = (theta_star * theta_star).recip();
        Some((t2, T::of(-2.0) * t2 / theta_star, T::zero()))
    }
}

/// Power law on the unit interval: f(x; theta) = theta x^(theta - 1).
#[derive(Debug, Clone, Copy, Default)]
pub struct Power;

impl<T: Real> Model<T> for Power {
    fn id(&self) -> String {
        "power".into()
    }

    fn param_support(&self) -> Interval<T> {
        Interval::open_positive()
    }

    fn data_support(&self) -> Interval<T> {
        Interval::unit()
    }

    fn loss(&self, x: T, theta: T) -> Result<T> {
        check_datum(self, x)?;
        check_param(self, theta)?;
        Ok(-theta.ln() - (theta - T::one()) * x.ln())
    }

    fn score_deriv(&self, x: T, theta: T) -> Result<T> {
        check_datum(self, x)?;
        check_param(self, theta)?;
        Ok(-theta.recip() - x.ln())
    }

    fn sample(&self, theta: T, rng: &mut RngStream) -> Result<T> {
        check_param(self, theta)?;
        // U^(1/theta); strictly inside (0, 1) because U is drawn open.
        Ok(rng.uniform::<T>().powf(theta.recip()))
    }

    fn closed_form_mle(&self, obs: &[T]) -> Option<T> {
        let n = T::of(obs.len() as f64);
        let sum_ln = obs.iter().fold(T::zero(), |a, &x| a + x.ln());
        Some(-n / sum_ln)
    }

    fn closed_form_fisher(&self, theta: T) -> Option<T> {
        Some((theta * theta).recip())
    }

    fn closed_form_moments(&self, z: T, theta_star: T) -> Option<(T, T)> {
        let d = theta_star.recip() - z.recip();
        Some((d, (theta_star * theta_star).recip() + d * d))
    }

    fn closed_form_partials(&self, theta_star: T) -> Option<(T, T, T)> {
        let t2 = (theta_star * theta_star).recip();
        Some((t2, T::of(-2.0) * t2 / theta_star, T::zero()))
    }
}

/// ln(1 + e^a) without overflow.
fn softplus<T: Real>(a: T) -> T {
    if a > T::of(30.0) {
        a + (-a).exp()
    } else {
        a.exp().ln_1p()
    }
}

/// Logistic sigmoid, evaluated on the side that avoids exp overflow.
fn sigmoid<T: Real>(a: T) -> T {
    if a >= T::zero() {
        ((-a).exp() + T::one()).recip()
    } else {
        let e = a.exp();
        e / (e + T::one())
    }
}

/// Fisk (log-logistic) with unit scale:
/// f(x; theta) = theta x^(theta-1) / (1 + x^theta)^2 on x > 0.
#[derive(Debug, Clone, Copy, Default)]
pub struct Fisk;

impl<T: Real> Model<T> for Fisk {
    fn id(&self) -> String {
        "fisk".into()
    }

    fn param_support(&self) -> Interval<T> {
        Interval::open_positive()
    }

    fn data_support(&self) -> Interval<T> {
        Interval::open_positive()
    }

    fn loss(&self, x: T, theta: T) -> Result<T> {
        check_datum(self, x)?;
        check_param(self, theta)?;
        // 2 ln(1 + x^theta) written through softplus(theta ln x): x^theta
        // overflows already at moderate theta for x away from 1.
        let lx = x.ln();
        Ok(T::of(2.0) * softplus(theta * lx) - (theta - T::one()) * lx - theta.ln())
    }

    fn score_deriv(&self, x: T, theta: T) -> Result<T> {
        check_datum(self, x)?;
        check_param(self, theta)?;
        // 2 ln(x) x^theta/(1+x^theta) - ln(x) - 1/theta, with the ratio as a
        // sigmoid so large |theta ln x| saturates cleanly instead of inf/inf.
        let lx = x.ln();
        Ok(T::of(2.0) * lx * sigmoid(theta * lx) - lx - theta.recip())
    }

    fn sample(&self, theta: T, rng: &mut RngStream) -> Result<T> {
        check_param(self, theta)?;
        let u: T = rng.uniform();
        // Inverse CDF: (u/(1-u))^(1/theta), in log form for tail accuracy.
        Ok(((u.ln() - (-u).ln_1p()) / theta).exp())
    }
}

/// Skew normal with shape theta: f(x; theta) = 2 phi(x) Phi(theta x).
#[derive(Debug, Clone, Copy, Default)]
pub struct SkewNormal;

impl<T: Real> Model<T> for SkewNormal {
    fn id(&self) -> String {
        "skew_normal".into()
    }

    fn param_support(&self) -> Interval<T> {
        Interval::real_line()
    }

    fn data_support(&self) -> Interval<T> {
        Interval::real_line()
    }

    fn loss(&self, x: T, theta: T) -> Result<T> {
        check_datum(self, x)?;
        check_param(self, theta)?;
        let ln2 = T::of(std::f64::consts::LN_2);
        Ok(x * x * T::of(0.5) + T::of(LN_SQRT_TWO_PI) - ln2 - ln_std_normal_cdf(theta * x)?)
    }

    fn score_deriv(&self, x: T, theta: T) -> Result<T> {
        check_datum(self, x)?;
        check_param(self, theta)?;
        Ok(-x * inv_mills(theta * x)?)
    }

    fn sample(&self, theta: T, rng: &mut RngStream) -> Result<T> {
        check_param(self, theta)?;
        if theta == T::zero() {
            return Ok(rng.standard_normal());
        }
        // Conditioning representation: with independent standard normals
        // (Z0, Z1), the law of Z1 given Z0 < theta Z1 has density
        // 2 phi(z) Phi(theta z); the rejected half contributes through -Z1.
        let z0: T = rng.standard_normal();
        let z1: T = rng.standard_normal();
        Ok(if z0 < theta * z1 { z1 } else { -z1 })
    }

    fn closed_form_fisher(&self, theta: T) -> Option<T> {
        // Known only at the fold point.
        if theta == T::zero() {
            Some(T::of(std::f64::consts::FRAC_2_PI))
        } else {
            None
        }
    }
}

/// Exponential with log-rate theta: f(x; theta) = exp(theta - x e^theta)
/// on x > 0. Fisher information is identically 1.
#[derive(Debug, Clone, Copy, Default)]
pub struct GumbelRate;

impl<T: Real> Model<T> for GumbelRate {
    fn id(&self) -> String {
        "gumbel_rate".into()
    }

    fn param_support(&self) -> Interval<T> {
        Interval::real_line()
    }

    fn data_support(&self) -> Interval<T> {
        Interval::open_positive()
    }

    fn loss(&self, x: T, theta: T) -> Result<T> {
        check_datum(self, x)?;
        check_param(self, theta)?;
        Ok(x * theta.exp() - theta)
    }

    fn score_deriv(&self, x: T, theta: T) -> Result<T> {
        check_datum(self, x)?;
        check_param(self, theta)?;
        Ok(x * theta.exp() - T::one())
    }

    fn sample(&self, theta: T, rng: &mut RngStream) -> Result<T> {
        check_param(self, theta)?;
        Ok(rng.standard_exp::<T>() * (-theta).exp())
    }

    fn closed_form_mle(&self, obs: &[T]) -> Option<T> {
        let n = T::of(obs.len() as f64);
        let mean = obs.iter().fold(T::zero(), |a, &x| a + x) / n;
        Some(-mean.ln())
    }

    fn closed_form_fisher(&self, _theta: T) -> Option<T> {
        Some(T::one())
    }

    fn closed_form_moments(&self, z: T, theta_star: T) -> Option<(T, T)> {
        let a = (z - theta_star).exp();
        let d = a - T::one();
        // E[(X e^z - 1)^2] under rate e^(theta*): second moment of an
        // exponential scales as 2 a^2.
        Some((d, T::of(2.0) * a * a - T::of(2.0) * a + T::one()))
    }

    fn closed_form_partials(&self, _theta_star: T) -> Option<(T, T, T)> {
        (T::one(), T::one(), T::of(2.0)).into()
    }
}
