//! One-parameter models expressed through their per-observation loss
//! `l(x; theta) = -log f(x; theta)` and its parameter derivative.
//!
//! Everything downstream leans on one structural fact: `l` is strictly
//! convex in `theta` for every `x` in the data support, so the derivative
//! `score_deriv` is strictly increasing in `theta` and mean scores have at
//! most one root. [`check_convexity`] probes that property on random
//! (x, theta, theta') triples for models without a proof in hand.

mod builtin;
mod expfam;

pub use builtin::{Exponential, Fisk, GumbelRate, Power, SkewNormal};
pub use expfam::{expfam_spec, model_from_expfam, ExpFamModel, ExpFamSpec};

use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::Real;

/// Open interval; either end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<T> {
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Interval<T> {
    pub fn new(lo: T, hi: T) -> Self {
        Interval { lo, hi }
    }

    pub fn open_positive() -> Self {
        Interval {
            lo: T::zero(),
            hi: T::infinity(),
        }
    }

    pub fn real_line() -> Self {
        Interval {
            lo: T::neg_infinity(),
            hi: T::infinity(),
        }
    }

    pub fn unit() -> Self {
        Interval {
            lo: T::zero(),
            hi: T::one(),
        }
    }

    /// Strict interior membership; endpoints are excluded.
    pub fn contains(&self, x: T) -> bool {
        x.is_finite() && self.lo < x && x < self.hi
    }

    /// A compact window inside the interval used for probe points and
    /// bracket hints: generous enough to be representative, clear of the
    /// endpoints where losses blow up.
    pub fn probe_window(&self) -> (T, T) {
        match (self.lo.is_finite(), self.hi.is_finite()) {
            (true, true) => {
                let w = self.hi - self.lo;
                (self.lo + w * T::of(0.1), self.hi - w * T::of(0.1))
            }
            (true, false) => (self.lo + T::of(0.2), self.lo + T::of(5.0)),
            (false, true) => (self.hi - T::of(5.0), self.hi - T::of(0.2)),
            (false, false) => (T::of(-3.0), T::of(3.0)),
        }
    }
}

impl<T: Real> std::fmt::Display for Interval<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {})", self.lo, self.hi)
    }
}

pub trait Model<T: Real>: Send + Sync {
    /// Stable identifier, also the CSV `model` label.
    fn id(&self) -> String;

    fn param_support(&self) -> Interval<T>;

    fn data_support(&self) -> Interval<T>;

    /// Per-observation loss `l(x; theta) = -log f(x; theta)`.
    fn loss(&self, x: T, theta: T) -> Result<T>;

    /// `d l / d theta`; strictly increasing in `theta`.
    fn score_deriv(&self, x: T, theta: T) -> Result<T>;

    /// One observation from `f(.; theta)`.
    fn sample(&self, theta: T, rng: &mut RngStream) -> Result<T>;

    /// MLE in closed form, if the model has one.
    fn closed_form_mle(&self, _obs: &[T]) -> Option<T> {
        None
    }

    /// Fisher information in closed form, if available.
    fn closed_form_fisher(&self, _theta: T) -> Option<T> {
        None
    }

    /// `(D, V)`: mean and mean-square of the score at `z` under `theta_star`,
    /// in closed form if available.
    fn closed_form_moments(&self, _z: T, _theta_star: T) -> Option<(T, T)> {
        None
    }

    /// `(dD/dz, d2D/dz2, dV/dz)` evaluated at `z = theta_star`, if available.
    fn closed_form_partials(&self, _theta_star: T) -> Option<(T, T, T)> {
        None
    }
}

/// Reject a parameter outside the open parameter support.
pub fn check_param<T: Real>(model: &(impl Model<T> + ?Sized), theta: T) -> Result<()> {
    let sup = model.param_support();
    if !sup.contains(theta) {
        return Err(Error::Domain(format!(
            "parameter {theta} outside {} support {sup}",
            model.id()
        )));
    }
    Ok(())
}

/// Reject an observation outside the open data support.
pub fn check_datum<T: Real>(model: &(impl Model<T> + ?Sized), x: T) -> Result<()> {
    let sup = model.data_support();
    if !sup.contains(x) {
        return Err(Error::Domain(format!(
            "observation {x} outside {} support {sup}",
            model.id()
        )));
    }
    Ok(())
}

/// Density `f(x; theta) = exp(-l(x; theta))`; underflows to zero in deep
/// tails, which is exactly what density-weighted integrands want.
pub fn density<T: Real>(model: &(impl Model<T> + ?Sized), x: T, theta: T) -> Result<T> {
    Ok((-model.loss(x, theta)?).exp())
}

/// Models addressable from the command line. `expfam:<name>` routes through
/// the generic exponential-family construction.
pub fn by_id<T: Real>(id: &str) -> Result<Box<dyn Model<T>>> {
    match id {
        "exponential" => Ok(Box::new(Exponential)),
        "power" => Ok(Box::new(Power)),
        "fisk" => Ok(Box::new(Fisk)),
        "skew_normal" => Ok(Box::new(SkewNormal)),
        "gumbel_rate" => Ok(Box::new(GumbelRate)),
        _ => match id.strip_prefix("expfam:") {
            Some(name) => Ok(Box::new(model_from_expfam(expfam_spec::<T>(name)?)?)),
            None => Err(Error::Invalid(format!(
                "unknown model id {id:?}; expected exponential, power, fisk, skew_normal, gumbel_rate, or expfam:<name>"
            ))),
        },
    }
}

#[derive(Debug, Clone)]
pub struct ConvexityWitness<T> {
    pub x: T,
    pub theta_a: T,
    pub theta_b: T,
    pub detail: String,
}

#[derive(Debug, Clone)]
pub struct ConvexityReport<T> {
    pub trials: u64,
    pub witness: Option<ConvexityWitness<T>>,
}

impl<T> ConvexityReport<T> {
    pub fn passed(&self) -> bool {
        self.witness.is_none()
    }
}

/// Randomized convexity audit: for each trial draw an observation and two
/// parameters, then require the supporting-line inequality
/// `l(x; a) >= l(x; b) + (a - b) l'(x; b)` and strict monotonicity of the
/// score in `theta`, both up to relative rounding slack.
pub fn check_convexity<T: Real>(
    model: &(impl Model<T> + ?Sized),
    trials: u64,
    rng: &mut RngStream,
) -> Result<ConvexityReport<T>> {
    let (p_lo, p_hi) = model.param_support().probe_window();
    let sep = (p_hi - p_lo) * T::of(1e-6);
    for _ in 0..trials {
        let theta_data = rng.uniform_in(p_lo, p_hi);
        let mut a = rng.uniform_in(p_lo, p_hi);
        let mut b = rng.uniform_in(p_lo, p_hi);
        if (a - b).abs() < sep {
            continue;
        }
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        let x = model.sample(theta_data, rng)?;
        let la = model.loss(x, a)?;
        let lb = model.loss(x, b)?;
        let ga = model.score_deriv(x, a)?;
        let gb = model.score_deriv(x, b)?;

        let slack = T::of(1e-9) * (T::one() + la.abs().max(lb.abs()));
        if la < lb + (a - b) * gb - slack {
            return Ok(ConvexityReport {
                trials,
                witness: Some(ConvexityWitness {
                    x,
                    theta_a: a,
                    theta_b: b,
                    detail: format!(
                        "supporting line violated: l(x;{a}) = {la} < {}",
                        lb + (a - b) * gb
                    ),
                }),
            });
        }
        let g_slack = T::of(1e-9) * (T::one() + ga.abs().max(gb.abs()));
        if ga >= gb + g_slack {
            return Ok(ConvexityReport {
                trials,
                witness: Some(ConvexityWitness {
                    x,
                    theta_a: a,
                    theta_b: b,
                    detail: format!("score not increasing: l'(x;{a}) = {ga} >= l'(x;{b}) = {gb}"),
                }),
            });
        }
    }
    Ok(ConvexityReport {
        trials,
        witness: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::fdiff::central_first;
    use crate::numerics::quad::integrate_1d;

    fn all_ids() -> Vec<&'static str> {
        vec![
            "exponential",
            "power",
            "fisk",
            "skew_normal",
            "gumbel_rate",
            "expfam:exponential",
            "expfam:power",
        ]
    }

    /// One parameter per family, well inside its support, used wherever a
    /// test just needs a representative point.
    fn theta_for(id: &str) -> f64 {
        match id {
            "skew_normal" => 1.5,
            "gumbel_rate" => 0.3,
            _ => 0.7,
        }
    }

    #[test]
    fn probe_windows_respect_support_shape() {
        let both: Interval<f64> = Interval::new(2.0, 4.0);
        assert_eq!(both.probe_window(), (2.2, 3.8));
        let right: Interval<f64> = Interval::open_positive();
        assert_eq!(right.probe_window(), (0.2, 5.0));
        let left: Interval<f64> = Interval::new(f64::NEG_INFINITY, 1.0);
        assert_eq!(left.probe_window(), (-4.0, 0.8));
        let line: Interval<f64> = Interval::real_line();
        assert_eq!(line.probe_window(), (-3.0, 3.0));
        assert!(line.contains(0.0));
        assert!(!line.contains(f64::INFINITY));
        assert!(!both.contains(2.0));
    }

    #[test]
    fn registry_resolves_every_id() {
        for id in all_ids() {
            let m = by_id::<f64>(id).unwrap();
            assert_eq!(m.id(), id);
        }
        assert!(by_id::<f64>("cauchy").is_err());
        assert!(by_id::<f64>("expfam:cauchy").is_err());
    }

    #[test]
    fn densities_integrate_to_one() {
        for id in all_ids() {
            let m = by_id::<f64>(id).unwrap();
            let theta = theta_for(id);
            let sup = m.data_support();
            let mass = integrate_1d(
                |x| density(m.as_ref(), x, theta).unwrap_or(f64::NAN),
                sup.lo,
                sup.hi,
            )
            .unwrap();
            assert!((mass - 1.0).abs() < 1e-8, "{id}: mass {mass}");
        }
        // the skew family is the only one whose shape changes sign
        let m = SkewNormal;
        for theta in [-2.5, 0.0, 4.0] {
            let mass = integrate_1d(
                |x| density(&m, x, theta).unwrap_or(f64::NAN),
                f64::NEG_INFINITY,
                f64::INFINITY,
            )
            .unwrap();
            assert!((mass - 1.0).abs() < 1e-8, "shape {theta}: mass {mass}");
        }
    }

    #[test]
    fn score_deriv_matches_loss_slope() {
        for id in all_ids() {
            let m = by_id::<f64>(id).unwrap();
            let theta = theta_for(id);
            let mut rng = RngStream::new(31, 0);
            for k in 0..20u64 {
                let x = m.sample(theta, &mut rng).unwrap();
                let at = theta * (0.85 + 0.02 * k as f64);
                let g = m.score_deriv(x, at).unwrap();
                let h = 1e-5 * at.abs().max(1.0);
                let fd = central_first(&mut |t| m.loss(x, t), at, h).unwrap();
                assert!(
                    (g - fd).abs() <= 1e-6 * (1.0 + g.abs()),
                    "{id}: x={x} theta={at} score={g} slope={fd}"
                );
            }
        }
    }

    #[test]
    fn convexity_audit_passes_every_family() {
        for id in all_ids() {
            let m = by_id::<f64>(id).unwrap();
            let mut rng = RngStream::new(7, 11);
            let report = check_convexity(m.as_ref(), 300, &mut rng).unwrap();
            assert!(
                report.passed(),
                "{id}: {:?}",
                report.witness.map(|w| w.detail)
            );
        }
    }

    /// Loss concave in theta; the audit must produce a witness.
    struct Concave;

    impl Model<f64> for Concave {
        fn id(&self) -> String {
            "concave".into()
        }
        fn param_support(&self) -> Interval<f64> {
            Interval::real_line()
        }
        fn data_support(&self) -> Interval<f64> {
            Interval::real_line()
        }
        fn loss(&self, x: f64, theta: f64) -> Result<f64> {
            Ok(-(theta - x) * (theta - x))
        }
        fn score_deriv(&self, x: f64, theta: f64) -> Result<f64> {
            Ok(-2.0 * (theta - x))
        }
        fn sample(&self, _theta: f64, rng: &mut RngStream) -> Result<f64> {
            Ok(rng.standard_normal())
        }
    }

    #[test]
    fn convexity_audit_flags_a_concave_loss() {
        let mut rng = RngStream::new(7, 11);
        let report = check_convexity(&Concave, 300, &mut rng).unwrap();
        assert!(report.witness.is_some());
    }

    #[test]
    fn support_checks_reject_out_of_domain_points() {
        assert!(Model::<f64>::loss(&Exponential, -1.0, 1.0).is_err());
        assert!(Model::<f64>::loss(&Exponential, 1.0, -1.0).is_err());
        assert!(Model::<f64>::loss(&Power, 1.5, 1.0).is_err());
        assert!(Model::<f64>::score_deriv(&GumbelRate, -0.5, 0.0).is_err());
        let mut rng = RngStream::new(1, 0);
        assert!(Model::<f64>::sample(&Fisk, 0.0, &mut rng).is_err());
    }

    #[test]
    fn expfam_rejects_nonpositive_curvature() {
        fn ident(x: f64) -> f64 {
            x
        }
        fn negative(_: f64) -> f64 {
            -1.0
        }
        let spec = ExpFamSpec {
            name: "broken".into(),
            param_support: Interval::open_positive(),
            data_support: Interval::open_positive(),
            suff_stat: ident,
            log_base: ident,
            b: ident,
            b1: ident,
            b2: negative,
            b3: None,
            sampler: None,
            mle: None,
        };
        assert!(matches!(
            model_from_expfam(spec),
            Err(Error::InvalidModel(_))
        ));
    }

    #[test]
    fn expfam_without_sampler_reports_invalid() {
        fn one(_: f64) -> f64 {
            1.0
        }
        fn ident(x: f64) -> f64 {
            x
        }
        let spec = ExpFamSpec {
            name: "nosampler".into(),
            param_support: Interval::open_positive(),
            data_support: Interval::open_positive(),
            suff_stat: ident,
            log_base: ident,
            b: ident,
            b1: ident,
            b2: one,
            b3: None,
            sampler: None,
            mle: None,
        };
        let m = model_from_expfam(spec).unwrap();
        let mut rng = RngStream::new(1, 0);
        assert!(m.sample(1.0, &mut rng).is_err());
        assert!(m.closed_form_mle(&[1.0]).is_none());
        assert_eq!(m.closed_form_fisher(2.0), Some(1.0));
        assert!(m.closed_form_partials(2.0).is_none());
    }

    #[test]
    fn expfam_paths_match_builtin_families() {
        type ModelPair = (Box<dyn Model<f64>>, Box<dyn Model<f64>>);
        let pairs: [ModelPair; 2] = [
            (Box::new(Exponential), by_id("expfam:exponential").unwrap()),
            (Box::new(Power), by_id("expfam:power").unwrap()),
        ];
        for (builtin, generic) in &pairs {
            let mut rng = RngStream::new(5, 3);
            for _ in 0..25 {
                let theta = rng.uniform_in(0.3, 3.0);
                let x = builtin.sample(theta, &mut rng).unwrap();
                let dl = builtin.loss(x, theta).unwrap() - generic.loss(x, theta).unwrap();
                assert!(dl.abs() < 1e-12, "{}: loss gap {dl}", generic.id());
                let dg =
                    builtin.score_deriv(x, theta).unwrap() - generic.score_deriv(x, theta).unwrap();
                assert!(dg.abs() < 1e-12, "{}: score gap {dg}", generic.id());
                let (d_b, v_b) = builtin.closed_form_moments(1.3, theta).unwrap();
                let (d_g, v_g) = generic.closed_form_moments(1.3, theta).unwrap();
                assert!((d_b - d_g).abs() < 1e-12 && (v_b - v_g).abs() < 1e-12);
            }
            let obs = [0.21, 0.47, 0.83];
            let mb = builtin.closed_form_mle(&obs).unwrap();
            let mg = generic.closed_form_mle(&obs).unwrap();
            assert!((mb - mg).abs() < 1e-12);
        }
    }

    #[test]
    fn samplers_stay_inside_the_data_support() {
        for id in all_ids() {
            let m = by_id::<f64>(id).unwrap();
            let sup = m.data_support();
            let mut rng = RngStream::new(97, 2);
            for _ in 0..500 {
                let x = m.sample(theta_for(id), &mut rng).unwrap();
                assert!(sup.contains(x), "{id}: draw {x} outside {sup}");
            }
        }
    }

    #[test]
    fn skew_sampler_at_zero_shape_is_a_plain_normal_draw() {
        let mut a = RngStream::new(123, 4);
        let mut b = RngStream::new(123, 4);
        for _ in 0..50 {
            let x = Model::<f64>::sample(&SkewNormal, 0.0, &mut a).unwrap();
            let y: f64 = b.standard_normal();
            assert_eq!(x, y);
        }
    }

    #[test]
    fn gumbel_moment_closed_form_matches_direct_integrals() {
        let m = GumbelRate;
        for (z, theta_star) in [(0.3, 0.0), (-0.2, 0.4), (1.1, 1.0)] {
            let (d, v) = m.closed_form_moments(z, theta_star).unwrap();
            let d_int = integrate_1d(
                |x: f64| {
                    let f = density(&m, x, theta_star).unwrap_or(f64::NAN);
                    if f == 0.0 {
                        0.0
                    } else {
                        f * m.score_deriv(x, z).unwrap_or(f64::NAN)
                    }
                },
                0.0,
                f64::INFINITY,
            )
            .unwrap();
            let v_int = integrate_1d(
                |x: f64| {
                    let f = density(&m, x, theta_star).unwrap_or(f64::NAN);
                    if f == 0.0 {
                        0.0
                    } else {
                        let g = m.score_deriv(x, z).unwrap_or(f64::NAN);
                        f * g * g
                    }
                },
                0.0,
                f64::INFINITY,
            )
            .unwrap();
            assert!((d - d_int).abs() < 1e-8, "D gap at ({z}, {theta_star})");
            assert!((v - v_int).abs() < 1e-8, "V gap at ({z}, {theta_star})");
        }
    }
}
