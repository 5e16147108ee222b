//! Maximum likelihood fitting by root-finding the mean score, plus the
//! Monte Carlo machinery built on repeated fits: the empirical sampling
//! distribution of the MLE and parametric bootstrap replicates.
//!
//! Strict convexity makes this easy: the mean score is strictly increasing
//! in `theta`, so the MLE exists iff the mean score changes sign on the
//! parameter support, and it is then unique.

use rayon::prelude::*;

use crate::curve::CdfCurve;
use crate::error::{Error, Result};
use crate::models::{check_datum, Model};
use crate::numerics::roots::{find_root_monotone_cfg, RootCfg};
use crate::numerics::{Grid, RngStream};
use crate::Real;

#[derive(Debug, Clone)]
pub struct Dataset<T> {
    obs: Vec<T>,
}

impl<T: Real> Dataset<T> {
    pub fn new(obs: Vec<T>) -> Result<Self> {
        if obs.is_empty() {
            return Err(Error::Invalid("dataset must be nonempty".into()));
        }
        for (i, &x) in obs.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::Invalid(format!(
                    "observation {i} is not finite: {x}"
                )));
            }
        }
        Ok(Dataset { obs })
    }

    /// Draw `n` observations from `model` at `theta`.
    pub fn simulate(
        model: &(impl Model<T> + ?Sized),
        theta: T,
        n: usize,
        rng: &mut RngStream,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("cannot simulate an empty dataset".into()));
        }
        let obs = (0..n)
            .map(|_| model.sample(theta, rng))
            .collect::<Result<Vec<T>>>()?;
        Ok(Dataset { obs })
    }

    pub fn obs(&self) -> &[T] {
        &self.obs
    }

    pub fn n(&self) -> usize {
        self.obs.len()
    }

    pub fn mean(&self) -> T {
        self.obs.iter().fold(T::zero(), |a, &x| a + x) / T::of(self.obs.len() as f64)
    }

    /// Every observation must lie in the model's open data support.
    pub fn validate_for(&self, model: &(impl Model<T> + ?Sized)) -> Result<()> {
        for &x in &self.obs {
            check_datum(model, x)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct WeightVector<T> {
    w: Vec<T>,
}

impl<T: Real> WeightVector<T> {
    /// Weights must be finite and nonnegative with at least one strictly
    /// positive entry. Scale does not matter; the solver normalizes.
    pub fn new(w: Vec<T>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::Invalid("weight vector must be nonempty".into()));
        }
        let mut any_pos = false;
        for (i, &wi) in w.iter().enumerate() {
            if !wi.is_finite() || wi < T::zero() {
                return Err(Error::Invalid(format!("weight {i} is invalid: {wi}")));
            }
            any_pos |= wi > T::zero();
        }
        if !any_pos {
            return Err(Error::Invalid("all weights are zero".into()));
        }
        Ok(WeightVector { w })
    }

    pub fn equal(n: usize) -> Result<Self> {
        WeightVector::new(vec![T::one(); n])
    }

    /// Independent standard exponential weights, one per observation.
    pub fn standard_exp(n: usize, rng: &mut RngStream) -> Result<Self> {
        if n == 0 {
            return Err(Error::Invalid("weight vector must be nonempty".into()));
        }
        WeightVector::new((0..n).map(|_| rng.standard_exp()).collect())
    }

    pub fn weights(&self) -> &[T] {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.w.len()
    }

    pub fn is_empty(&self) -> bool {
        self.w.is_empty()
    }
}

/// Residual bound above which a closed-form MLE is treated as inconsistent
/// with the score (an implementation bug, not a data problem). Widened to
/// 100 eps so the gate scales with the working precision.
fn closed_form_residual<T: Real>() -> T {
    T::of(1e-8).max(T::epsilon() * T::of(100.0))
}

/// Hint for the score root when the model gives no closed form.
fn default_hint<T: Real>(model: &(impl Model<T> + ?Sized)) -> T {
    let (lo, hi) = model.param_support().probe_window();
    (lo + hi) * T::of(0.5)
}

/// Accept a bisection root only when the objective is strictly negative
/// just below it and strictly positive just above.
///
/// Mean scores can underflow to an exact zero along a plateau when the
/// fitted parameter runs away toward a support edge (skew-shaped data whose
/// observations all share a sign, say); the underflow point would otherwise
/// pass for a root. A genuine interior root of a strictly increasing score
/// has strict signs a relative 1e-3 step away.
fn audit_interior_root<T: Real>(g: &impl Fn(T) -> T, root: T, support: (T, T)) -> Result<T> {
    let (slo, shi) = support;
    let mut delta = root.abs().max(T::one()) * T::of(1e-3);
    for _ in 0..80 {
        let (a, b) = (root - delta, root + delta);
        if a > slo && b < shi {
            let (fa, fb) = (g(a), g(b));
            if fa < T::zero() && fb > T::zero() {
                return Ok(root);
            }
            if !fa.is_nan() && !fb.is_nan() {
                return Err(Error::NoRoot {
                    lo: a.to_f64_lossy(),
                    hi: b.to_f64_lossy(),
                    f_lo: fa.to_f64_lossy(),
                    f_hi: fb.to_f64_lossy(),
                });
            }
        }
        delta = delta * T::of(0.5);
    }
    Err(Error::Unstable(format!(
        "cannot audit score root {root}: no room inside the support"
    )))
}

fn mean_score<'a, T: Real, M: Model<T> + ?Sized>(
    model: &'a M,
    data: &Dataset<T>,
) -> impl Fn(T) -> T + 'a {
    let obs = data.obs().to_vec();
    let k = T::of(obs.len() as f64);
    move |theta: T| {
        let mut acc = T::zero();
        for &x in &obs {
            match model.score_deriv(x, theta) {
                Ok(g) => acc = acc + g,
                Err(_) => return T::nan(),
            }
        }
        acc / k
    }
}

/// Maximum likelihood estimate for `data` under `model`.
///
/// Closed forms are used when available but always audited against the
/// score: the mean score at the returned estimate must vanish to within
/// 1e-8, otherwise the closed form and the loss disagree and the fit fails.
pub fn solve_mle<T: Real>(model: &(impl Model<T> + ?Sized), data: &Dataset<T>) -> Result<T> {
    data.validate_for(model)?;
    let g = mean_score(model, data);
    let sup = model.param_support();
    if let Some(hat) = model.closed_form_mle(data.obs()) {
        if !sup.contains(hat) {
            return Err(Error::NoRoot {
                lo: hat.to_f64_lossy(),
                hi: hat.to_f64_lossy(),
                f_lo: f64::NAN,
                f_hi: f64::NAN,
            });
        }
        let resid = g(hat);
        if !(resid.abs() <= closed_form_residual::<T>()) {
            return Err(Error::InvalidModel(format!(
                "closed-form MLE {hat} leaves mean score {resid}; loss and closed form disagree"
            )));
        }
        return Ok(hat);
    }
    let hint = default_hint(model);
    let root = find_root_monotone_cfg(&g, hint, (sup.lo, sup.hi), &RootCfg::default())?;
    audit_interior_root(&g, root, (sup.lo, sup.hi))
}

/// Weighted MLE: root of `sum_i w_i l'(x_i; theta)` with normalized weights.
/// Zero-weight observations drop out entirely (they are not validated away;
/// they still must lie in the data support).
pub fn solve_weighted_mle<T: Real>(
    model: &(impl Model<T> + ?Sized),
    data: &Dataset<T>,
    weights: &WeightVector<T>,
) -> Result<T> {
    if weights.len() != data.n() {
        return Err(Error::Invalid(format!(
            "{} weights for {} observations",
            weights.len(),
            data.n()
        )));
    }
    data.validate_for(model)?;
    let total = weights.weights().iter().fold(T::zero(), |a, &w| a + w);
    let wn: Vec<T> = weights.weights().iter().map(|&w| w / total).collect();
    let obs = data.obs().to_vec();
    let g = move |theta: T| {
        let mut acc = T::zero();
        for (&x, &w) in obs.iter().zip(&wn) {
            if w == T::zero() {
                continue;
            }
            match model.score_deriv(x, theta) {
                Ok(s) => acc = acc + w * s,
                Err(_) => return T::nan(),
            }
        }
        acc
    };
    let sup = model.param_support();
    let hint = match model.closed_form_mle(data.obs()) {
        Some(hat) if sup.contains(hat) => hat,
        _ => default_hint(model),
    };
    let root = find_root_monotone_cfg(&g, hint, (sup.lo, sup.hi), &RootCfg::default())?;
    audit_interior_root(&g, root, (sup.lo, sup.hi))
}

/// Empirical sampling distribution of the MLE at sample size `n`.
#[derive(Debug, Clone)]
pub struct EmpiricalMleDistribution<T> {
    pub curve: CdfCurve<T>,
    /// Sorted fitted values across replicates.
    pub mles: Vec<T>,
    /// Replicates dropped because their mean score never changed sign.
    pub excluded: u64,
}

/// Fit `reps` independent simulated datasets and return the empirical CDF
/// of the fitted values on `grid` (default: 201 points spanning the 0.001
/// and 0.999 sample quantiles).
///
/// Replicates are fanned out over substreams indexed by replicate, so the
/// result is one fixed function of (seed, stream), regardless of threads.
pub fn empirical_mle_distribution<T: Real>(
    model: &(impl Model<T> + ?Sized),
    theta_star: T,
    n: usize,
    reps: usize,
    rng: &RngStream,
    grid: Option<Grid<T>>,
) -> Result<EmpiricalMleDistribution<T>> {
    if reps == 0 {
        return Err(Error::Invalid("need at least one replicate".into()));
    }
    if n == 0 {
        return Err(Error::Invalid("sample size must be positive".into()));
    }
    let fits = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut sub = rng.substream(r as u64);
            let data = Dataset::simulate(model, theta_star, n, &mut sub)?;
            match solve_mle(model, &data) {
                Ok(hat) => Ok(Some(hat)),
                Err(Error::NoRoot { .. }) => Ok(None),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<Option<T>>>>()?;
    let mut mles: Vec<T> = fits.iter().copied().flatten().collect();
    let excluded = (fits.len() - mles.len()) as u64;
    if mles.is_empty() {
        return Err(Error::Invalid(format!(
            "all {reps} replicates were excluded (no score sign change)"
        )));
    }
    mles.sort_by(|a, b| a.partial_cmp(b).expect("MLEs are finite"));
    let grid = match grid {
        Some(g) => g,
        None => default_mle_grid(&mles)?,
    };
    let mut curve = CdfCurve::empirical(&mles, grid)?;
    curve.meta.model = Some(model.id());
    curve.meta.n = Some(n);
    curve.meta.theta_star = Some(theta_star.to_f64_lossy());
    curve.meta.seed = Some((rng.seed(), rng.stream_id()));
    Ok(EmpiricalMleDistribution {
        curve,
        mles,
        excluded,
    })
}

/// 201 points spanning the 0.001 and 0.999 quantiles of the sorted fits,
/// padded when the span degenerates.
fn default_mle_grid<T: Real>(sorted: &[T]) -> Result<Grid<T>> {
    let k = sorted.len();
    let q = |p: f64| -> T {
        let idx = ((p * (k - 1) as f64).round() as usize).min(k - 1);
        sorted[idx]
    };
    let mut lo = q(0.001);
    let mut hi = q(0.999);
    let pad = (hi - lo) * T::of(1e-3) + T::of(1e-6) * lo.abs().max(hi.abs()).max(T::one());
    lo = lo - pad;
    hi = hi + pad;
    Grid::linspace(lo, hi, 201)
}

/// One parametric bootstrap replicate: simulate `n` observations at
/// `theta_hat`, refit, return the new estimate.
pub fn parametric_bootstrap_sample<T: Real>(
    model: &(impl Model<T> + ?Sized),
    theta_hat: T,
    n: usize,
    rng: &mut RngStream,
) -> Result<T> {
    let data = Dataset::simulate(model, theta_hat, n, rng)?;
    solve_mle(model, &data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{Exponential, Fisk, Interval, SkewNormal};

    /// Forwards the exponential model but hides its closed forms, forcing
    /// the bisection path.
    struct NoClosed;

    impl Model<f64> for NoClosed {
        fn id(&self) -> String {
            "noclosed".into()
        }
        fn param_support(&self) -> Interval<f64> {
            Model::<f64>::param_support(&Exponential)
        }
        fn data_support(&self) -> Interval<f64> {
            Model::<f64>::data_support(&Exponential)
        }
        fn loss(&self, x: f64, theta: f64) -> Result<f64> {
            Exponential.loss(x, theta)
        }
        fn score_deriv(&self, x: f64, theta: f64) -> Result<f64> {
            Exponential.score_deriv(x, theta)
        }
        fn sample(&self, theta: f64, rng: &mut RngStream) -> Result<f64> {
            Exponential.sample(theta, rng)
        }
    }

    /// Claims an MLE that does not zero the score.
    struct LyingMle;

    impl Model<f64> for LyingMle {
        fn id(&self) -> String {
            "lyingmle".into()
        }
        fn param_support(&self) -> Interval<f64> {
            Model::<f64>::param_support(&Exponential)
        }
        fn data_support(&self) -> Interval<f64> {
            Model::<f64>::data_support(&Exponential)
        }
        fn loss(&self, x: f64, theta: f64) -> Result<f64> {
            Exponential.loss(x, theta)
        }
        fn score_deriv(&self, x: f64, theta: f64) -> Result<f64> {
            Exponential.score_deriv(x, theta)
        }
        fn sample(&self, theta: f64, rng: &mut RngStream) -> Result<f64> {
            Exponential.sample(theta, rng)
        }
        fn closed_form_mle(&self, obs: &[f64]) -> Option<f64> {
            let mean = obs.iter().sum::<f64>() / obs.len() as f64;
            Some(2.0 / mean)
        }
    }

    /// Claims an MLE outside the parameter support.
    struct EscapedMle;

    impl Model<f64> for EscapedMle {
        fn id(&self) -> String {
            "escapedmle".into()
        }
        fn param_support(&self) -> Interval<f64> {
            Model::<f64>::param_support(&Exponential)
        }
        fn data_support(&self) -> Interval<f64> {
            Model::<f64>::data_support(&Exponential)
        }
        fn loss(&self, x: f64, theta: f64) -> Result<f64> {
            Exponential.loss(x, theta)
        }
        fn score_deriv(&self, x: f64, theta: f64) -> Result<f64> {
            Exponential.score_deriv(x, theta)
        }
        fn sample(&self, theta: f64, rng: &mut RngStream) -> Result<f64> {
            Exponential.sample(theta, rng)
        }
        fn closed_form_mle(&self, _obs: &[f64]) -> Option<f64> {
            Some(-1.0)
        }
    }

    #[test]
    fn dataset_validation_rejects_bad_input() {
        assert!(matches!(
            Dataset::<f64>::new(vec![]),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            Dataset::new(vec![1.0f64, f64::NAN]),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            Dataset::new(vec![1.0f64, f64::INFINITY]),
            Err(Error::Invalid(_))
        ));
        let data = Dataset::new(vec![1.0f64, 2.0, 3.0]).unwrap();
        assert_eq!(data.mean(), 2.0);
        assert_eq!(data.n(), 3);
        let mixed = Dataset::new(vec![1.0f64, -0.5]).unwrap();
        assert!(matches!(
            mixed.validate_for(&Exponential),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn simulation_is_deterministic_per_stream() {
        let mut r1 = RngStream::new(11, 3);
        let mut r2 = RngStream::new(11, 3);
        let a: Dataset<f64> = Dataset::simulate(&Exponential, 2.0, 16, &mut r1).unwrap();
        let b: Dataset<f64> = Dataset::simulate(&Exponential, 2.0, 16, &mut r2).unwrap();
        assert_eq!(a.obs(), b.obs());
        let mut r3 = RngStream::new(11, 4);
        let c: Dataset<f64> = Dataset::simulate(&Exponential, 2.0, 16, &mut r3).unwrap();
        assert_ne!(a.obs(), c.obs());
        assert!(matches!(
            Dataset::<f64>::simulate(&Exponential, 2.0, 0, &mut r1),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn bisection_recovers_the_hidden_closed_form() {
        let data = Dataset::new(vec![0.5f64, 1.0, 2.5, 0.3, 1.7]).unwrap();
        let closed = solve_mle(&Exponential, &data).unwrap();
        assert_eq!(closed, 1.0 / data.mean());
        let root = solve_mle(&NoClosed, &data).unwrap();
        assert!(
            (root - closed).abs() <= 1e-9 * closed,
            "root {root} vs closed {closed}"
        );
    }

    #[test]
    fn fitted_fisk_shape_zeroes_the_mean_score() {
        let mut rng = RngStream::new(21, 0);
        let data: Dataset<f64> = Dataset::simulate(&Fisk, 2.0, 40, &mut rng).unwrap();
        let hat = solve_mle(&Fisk, &data).unwrap();
        assert!(hat > 1.0 && hat < 4.0, "implausible fit {hat}");
        let g = mean_score(&Fisk, &data);
        assert!(g(hat).abs() <= 1e-8, "residual {}", g(hat));
    }

    #[test]
    fn single_signed_skew_data_has_no_finite_fit() {
        let pos = Dataset::new(vec![0.3f64, 1.1, 0.7, 2.2]).unwrap();
        assert!(matches!(
            solve_mle(&SkewNormal, &pos),
            Err(Error::NoRoot { .. })
        ));
        let neg = Dataset::new(vec![-0.3f64, -1.1, -0.7, -2.2]).unwrap();
        assert!(matches!(
            solve_mle(&SkewNormal, &neg),
            Err(Error::NoRoot { .. })
        ));
        let mixed = Dataset::new(vec![0.3f64, -1.1, 0.7, -2.2, 1.4]).unwrap();
        let hat = solve_mle(&SkewNormal, &mixed).unwrap();
        assert!(hat.is_finite());
    }

    #[test]
    fn closed_form_claims_are_audited_against_the_score() {
        let data = Dataset::new(vec![0.5f64, 1.0, 2.5, 0.3, 1.7]).unwrap();
        assert!(matches!(
            solve_mle(&LyingMle, &data),
            Err(Error::InvalidModel(_))
        ));
        assert!(matches!(
            solve_mle(&EscapedMle, &data),
            Err(Error::NoRoot { .. })
        ));
    }

    #[test]
    fn weighted_fit_ignores_weight_scale() {
        let mut rng = RngStream::new(33, 1);
        let data: Dataset<f64> = Dataset::simulate(&Fisk, 1.5, 25, &mut rng).unwrap();
        let w = WeightVector::standard_exp(25, &mut rng).unwrap();
        let scaled = WeightVector::new(w.weights().iter().map(|&x| 3.7 * x).collect()).unwrap();
        let a = solve_weighted_mle(&Fisk, &data, &w).unwrap();
        let b = solve_weighted_mle(&Fisk, &data, &scaled).unwrap();
        assert!((a - b).abs() <= 1e-9 * a.abs(), "{a} vs {b}");
    }

    #[test]
    fn zero_weights_drop_observations_exactly() {
        let full = Dataset::new(vec![0.6f64, 9.0, 1.4, 9.0]).unwrap();
        let wf = WeightVector::new(vec![0.8f64, 0.0, 1.9, 0.0]).unwrap();
        let kept = Dataset::new(vec![0.6f64, 1.4]).unwrap();
        let wk = WeightVector::new(vec![0.8f64, 1.9]).unwrap();
        let a = solve_weighted_mle(&Fisk, &full, &wf).unwrap();
        let b = solve_weighted_mle(&Fisk, &kept, &wk).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn equal_weights_reproduce_the_plain_fit() {
        let data = Dataset::new(vec![0.5f64, 1.0, 2.5, 0.3, 1.7]).unwrap();
        let w = WeightVector::equal(5).unwrap();
        let weighted = solve_weighted_mle(&Exponential, &data, &w).unwrap();
        let plain = solve_mle(&Exponential, &data).unwrap();
        assert_eq!(weighted, plain);
    }

    #[test]
    fn weight_vector_validation() {
        assert!(matches!(
            WeightVector::<f64>::new(vec![]),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            WeightVector::new(vec![1.0f64, -0.1]),
            Err(Error::Invalid(_))
        ));
        assert!(matches!(
            WeightVector::new(vec![0.0f64, 0.0]),
            Err(Error::Invalid(_))
        ));
        let data = Dataset::new(vec![1.0f64, 2.0]).unwrap();
        let w = WeightVector::new(vec![1.0f64, 2.0, 3.0]).unwrap();
        assert!(matches!(
            solve_weighted_mle(&Exponential, &data, &w),
            Err(Error::Invalid(_))
        ));
    }

    #[test]
    fn empirical_distribution_is_deterministic_and_calibrated() {
        let rng = RngStream::new(404, 7);
        let d1 = empirical_mle_distribution(&Exponential, 1.0f64, 10, 30_000, &rng, None).unwrap();
        let d2 = empirical_mle_distribution(&Exponential, 1.0f64, 10, 30_000, &rng, None).unwrap();
        assert_eq!(d1.mles, d2.mles);
        assert_eq!(d1.curve.values(), d2.curve.values());
        assert_eq!(d1.excluded, 0);

        // P(mle <= 1) for unit-rate samples of size 10 is 0.45792971447185221.
        let below = d1.mles.partition_point(|&t| t <= 1.0);
        let frac = below as f64 / d1.mles.len() as f64;
        assert!((frac - 0.45792971447185221).abs() <= 0.015, "frac {frac}");

        assert_eq!(d1.curve.len(), 201);
        assert!(d1.curve.is_nondecreasing(0.0));
        let median = d1.mles[d1.mles.len() / 2];
        assert!(d1.curve.grid().first() < median && median < d1.curve.grid().last());
        assert_eq!(d1.curve.meta.model.as_deref(), Some("exponential"));
        assert_eq!(d1.curve.meta.n, Some(10));
        assert_eq!(d1.curve.meta.seed, Some((404, 7)));
    }

    #[test]
    fn bootstrap_replicates_center_near_the_fitted_value() {
        // Unit-rate theory at n = 10: E 10/9 * hat, sd 0.39283710065919307 * hat.
        let hat = 2.0f64;
        let reps = 20_000;
        let mut rng = RngStream::new(77, 0);
        let mut sum = 0.0f64;
        let mut sumsq = 0.0f64;
        for _ in 0..reps {
            let b = parametric_bootstrap_sample(&Exponential, hat, 10, &mut rng).unwrap();
            sum += b;
            sumsq += b * b;
        }
        let mean = sum / reps as f64;
        let sd = (sumsq / reps as f64 - mean * mean).sqrt();
        assert!((mean - hat * 10.0 / 9.0).abs() <= 0.03, "mean {mean}");
        assert!((sd - hat * 0.39283710065919307).abs() <= 0.05, "sd {sd}");
    }
}
