//! First and second moments of the score.
//!
//! For a probe point `z` and a data-generating parameter `theta_star`,
//! `D = E[l'(X; z)]` and `V = E[l'(X; z)^2]` with `X ~ f(.; theta_star)`.
//! The spread `V - D^2` is a variance, so it is nonnegative up to rounding;
//! how violations are handled depends on where the numbers came from
//! (closed forms may not violate it, sampled estimates may).

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::{check_param, density, Model};
use crate::numerics::fdiff::{central_first, central_second};
use crate::numerics::quad::integrate_softened_tol;
use crate::numerics::RngStream;
use crate::Real;

/// How to evaluate the moment integrals.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MomentMethod {
    /// Model-provided formulas; errors if the model has none.
    Closed,
    /// Adaptive quadrature of the density-weighted score.
    Quadrature,
    /// Monte Carlo with an explicit draw count and stream identity, so a
    /// given method value always produces the same estimate.
    MonteCarlo { draws: u64, seed: u64, stream: u64 },
}

impl std::fmt::Display for MomentMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MomentMethod::Closed => f.write_str("closed"),
            MomentMethod::Quadrature => f.write_str("quad"),
            MomentMethod::MonteCarlo { draws, .. } => write!(f, "mc:{draws}"),
        }
    }
}

/// Variances are clamped no lower than this; a clamp is recorded on the
/// result rather than silently absorbed.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// Slack allowed on V >= D^2 for closed forms and quadrature before the
/// violation counts as a model/accuracy bug instead of rounding.
const SPREAD_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy)]
pub struct ScoreMoments<T> {
    pub d: T,
    pub v: T,
    /// V - D^2, clamped to [`VARIANCE_FLOOR`] if need be.
    pub variance: T,
    /// Monte Carlo standard errors (se_d, se_v) when sampled.
    pub se: Option<(T, T)>,
    pub variance_clamped: bool,
}

fn assemble<T: Real>(d: T, v: T, se: Option<(T, T)>, strict: bool) -> Result<ScoreMoments<T>> {
    if !d.is_finite() || !v.is_finite() {
        return Err(Error::Unstable(format!(
            "score moments are not finite: D = {d}, V = {v}"
        )));
    }
    let spread = v - d * d;
    if strict {
        let slack = T::of(SPREAD_SLACK) * T::one().max(v.abs());
        if spread < -slack {
            return Err(Error::InvalidModel(format!(
                "V - D^2 = {spread} is negative beyond rounding slack (D = {d}, V = {v})"
            )));
        }
    }
    let floor = T::of(VARIANCE_FLOOR);
    let (variance, variance_clamped) = if spread < floor {
        (floor, true)
    } else {
        (spread, false)
    };
    Ok(ScoreMoments {
        d,
        v,
        variance,
        se,
        variance_clamped,
    })
}

/// Evaluate `(D, V)` at `(z, theta_star)` with the requested method.
pub fn score_moments<T: Real>(
    model: &(impl Model<T> + ?Sized),
    z: T,
    theta_star: T,
    method: &MomentMethod,
) -> Result<ScoreMoments<T>> {
    check_param(model, z)?;
    check_param(model, theta_star)?;
    match method {
        MomentMethod::Closed => {
            let (d, v) = model.closed_form_moments(z, theta_star).ok_or_else(|| {
                Error::Invalid(format!("model {} has no closed-form moments", model.id()))
            })?;
            assemble(d, v, None, true)
        }
        MomentMethod::Quadrature => {
            let (d, v) = quadrature_moments(model, z, theta_star)?;
            assemble(d, v, None, true)
        }
        MomentMethod::MonteCarlo {
            draws,
            seed,
            stream,
        } => {
            let sample =
                ScoreSample::draw(model, theta_star, *draws, &RngStream::new(*seed, *stream))?;
            sample.moments_at(model, z)
        }
    }
}

/// Accuracy target for the moment integrals; tighter than the downstream
/// 1e-8 agreement checks by two orders.
fn moment_quad_tol<T: Real>() -> T {
    T::of(1e-10).max(T::epsilon() * T::of(100.0))
}

fn quadrature_moments<T: Real>(
    model: &(impl Model<T> + ?Sized),
    z: T,
    theta_star: T,
) -> Result<(T, T)> {
    let sup = model.data_support();
    let tol = moment_quad_tol::<T>();
    let d = integrate_softened_tol(
        |x| weighted_score(model, x, z, theta_star, false),
        sup.lo,
        sup.hi,
        tol,
    )?;
    let v = integrate_softened_tol(
        |x| weighted_score(model, x, z, theta_star, true),
        sup.lo,
        sup.hi,
        tol,
    )?;
    Ok((d.value, v.value))
}

/// l'(x; z) f(x; theta*), optionally squared. Evaluates the density first:
/// a tail that underflows to zero must short-circuit before the score (which
/// can overflow in the same tail) is touched.
fn weighted_score<T: Real>(
    model: &(impl Model<T> + ?Sized),
    x: T,
    z: T,
    theta_star: T,
    squared: bool,
) -> T {
    let w = match density(model, x, theta_star) {
        Ok(w) => w,
        Err(_) => return T::nan(),
    };
    if w == T::zero() {
        return T::zero();
    }
    let g = match model.score_deriv(x, z) {
        Ok(g) => g,
        Err(_) => return T::nan(),
    };
    if squared {
        g * g * w
    } else {
        g * w
    }
}

/// A reusable score sample: common random numbers across probe points.
///
/// Sharing one sample across a whole grid keeps sampled distribution curves
/// monotone in `z` (each draw's score is monotone in `z`), which independent
/// per-point sampling would destroy.
pub struct ScoreSample<T> {
    xs: Vec<T>,
    theta_star: T,
    seed: u64,
    stream: u64,
}

/// Work unit for parallel reductions over draws; fixed size keeps the
/// reduction tree, and therefore rounding, independent of thread count.
const CHUNK: usize = 8192;

impl<T: Real> ScoreSample<T> {
    pub fn draw(
        model: &(impl Model<T> + ?Sized),
        theta_star: T,
        draws: u64,
        rng: &RngStream,
    ) -> Result<Self> {
        if draws < 100 {
            return Err(Error::Invalid(format!(
                "Monte Carlo moments need at least 100 draws, got {draws}"
            )));
        }
        check_param(model, theta_star)?;
        let n_chunks = (draws as usize).div_ceil(CHUNK);
        let xs = (0..n_chunks)
            .into_par_iter()
            .map(|c| {
                let mut sub = rng.substream(c as u64);
                let lo = c * CHUNK;
                let hi = ((c + 1) * CHUNK).min(draws as usize);
                (lo..hi)
                    .map(|_| model.sample(theta_star, &mut sub))
                    .collect::<Result<Vec<T>>>()
            })
            .collect::<Result<Vec<Vec<T>>>>()?
            .concat();
        Ok(ScoreSample {
            xs,
            theta_star,
            seed: rng.seed(),
            stream: rng.stream_id(),
        })
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn theta_star(&self) -> T {
        self.theta_star
    }

    pub fn seed(&self) -> (u64, u64) {
        (self.seed, self.stream)
    }

    /// Sample moments of the score at probe point `z`.
    pub fn moments_at(&self, model: &(impl Model<T> + ?Sized), z: T) -> Result<ScoreMoments<T>> {
        check_param(model, z)?;
        let sums = self
            .xs
            .par_chunks(CHUNK)
            .map(|chunk| {
                let mut s = PowerSums::<T>::default();
                for &x in chunk {
                    let g = model.score_deriv(x, z)?;
                    s.add(g);
                }
                Ok(s)
            })
            .collect::<Result<Vec<PowerSums<T>>>>()?;
        let mut total = PowerSums::<T>::default();
        for s in sums {
            total.merge(s);
        }
        let k = T::of(self.xs.len() as f64);
        let d = total.s1.value() / k;
        let v = total.s2.value() / k;
        let m4 = total.s4.value() / k;
        // se(D) ~ sd(score)/sqrt(k), se(V) ~ sd(score^2)/sqrt(k)
        let var_g = (v - d * d).max(T::zero());
        let var_g2 = (m4 - v * v).max(T::zero());
        let se = Some(((var_g / k).sqrt(), (var_g2 / k).sqrt()));
        assemble(d, v, se, false)
    }
}

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy)]
pub struct Kahan<T> {
    sum: T,
    comp: T,
}

impl<T: Real> Default for Kahan<T> {
    fn default() -> Self {
        Kahan {
            sum: T::zero(),
            comp: T::zero(),
        }
    }
}

impl<T: Real> Kahan<T> {
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Copy)]
struct PowerSums<T> {
    s1: Kahan<T>,
    s2: Kahan<T>,
    s4: Kahan<T>,
}

impl<T: Real> Default for PowerSums<T> {
    fn default() -> Self {
        PowerSums {
            s1: Kahan::default(),
            s2: Kahan::default(),
            s4: Kahan::default(),
        }
    }
}

impl<T: Real> PowerSums<T> {
    fn add(&mut self, g: T) {
        let g2 = g * g;
        self.s1.add(g);
        self.s2.add(g2);
        self.s4.add(g2 * g2);
    }

    fn merge(&mut self, other: PowerSums<T>) {
        self.s1.add(other.s1.value());
        self.s2.add(other.s2.value());
        self.s4.add(other.s4.value());
    }
}

/// Fisher information at `theta`: closed form if the model has one, else
/// the quadrature V at `z = theta`.
pub fn fisher_info<T: Real>(model: &(impl Model<T> + ?Sized), theta: T) -> Result<T> {
    check_param(model, theta)?;
    let info = match model.closed_form_fisher(theta) {
        Some(i) => i,
        None => match model.closed_form_moments(theta, theta) {
            Some((_, v)) => v,
            None => quadrature_moments(model, theta, theta)?.1,
        },
    };
    if !(info > T::zero()) || !info.is_finite() {
        return Err(Error::InvalidModel(format!(
            "Fisher information at {theta} is {info}; must be positive"
        )));
    }
    Ok(info)
}

/// Derivatives of the moment maps in the probe point, at `z = theta_star`.
#[derive(Debug, Clone, Copy)]
pub struct MomentPartials<T> {
    pub dd_dz: T,
    pub d2d_dz2: T,
    pub dv_dz: T,
    /// True when a finite-difference stencil had to shrink to stay inside
    /// the parameter support.
    pub step_shrunk: bool,
}

/// Moment partials: model closed forms when present, otherwise central
/// differences over quadrature-backed moments.
pub fn moment_partials<T: Real>(
    model: &(impl Model<T> + ?Sized),
    theta_star: T,
) -> Result<MomentPartials<T>> {
    check_param(model, theta_star)?;
    if let Some((dd, d2d, dv)) = model.closed_form_partials(theta_star) {
        return Ok(MomentPartials {
            dd_dz: dd,
            d2d_dz2: d2d,
            dv_dz: dv,
            step_shrunk: false,
        });
    }
    moment_partials_fd(model, theta_star, &MomentMethod::Quadrature)
}

/// Finite-difference moment partials with the stated method supplying D and V.
pub fn moment_partials_fd<T: Real>(
    model: &(impl Model<T> + ?Sized),
    theta_star: T,
    method: &MomentMethod,
) -> Result<MomentPartials<T>> {
    check_param(model, theta_star)?;
    // Steps scale with the parameter's natural unit 1/sqrt(I). The second
    // difference uses a much wider step than a clean-function stencil
    // because each moment evaluation carries quadrature-level noise.
    let info = fisher_info(model, theta_star)?;
    let scale = info.sqrt().recip();
    let eps = T::epsilon();
    let mut h1 = scale * eps.cbrt();
    let mut h2 = scale * eps.powf(T::of(1.0 / 6.0));
    let sup = model.param_support();
    let mut step_shrunk = false;
    for h in [&mut h1, &mut h2] {
        let mut tries = 0;
        while !(sup.contains(theta_star - *h) && sup.contains(theta_star + *h)) {
            *h = *h * T::of(0.5);
            tries += 1;
            if tries > 60 {
                return Err(Error::Domain(format!(
                    "no room for a difference stencil around {theta_star} inside {sup}"
                )));
            }
            step_shrunk = true;
        }
    }
    let mut d_at = |z: T| score_moments(model, z, theta_star, method).map(|m| m.d);
    let dd_dz = central_first(&mut d_at, theta_star, h1)?;
    let d2d_dz2 = central_second(&mut d_at, theta_star, h2)?;
    let mut v_at = |z: T| score_moments(model, z, theta_star, method).map(|m| m.v);
    let dv_dz = central_first(&mut v_at, theta_star, h1)?;
    Ok(MomentPartials {
        dd_dz,
        d2d_dz2,
        dv_dz,
        step_shrunk,
    })
}
