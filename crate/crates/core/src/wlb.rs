//! Weighted likelihood bootstrap: exact distribution of the weighted MLE
//! conditional on the data, plus approximations and samplers.
//!
//! With standard exponential weights v_i, the weighted MLE is at most z
//! exactly when sum_i v_i g_i >= 0, where g_i = l'(x_i; z) are fixed
//! numbers once the data and probe point are fixed. Splitting the g_i by
//! sign makes both sides of the comparison hypoexponential sums (rates
//! 1/|g_i|), and the probability that one exceeds the other has a closed
//! bilinear form in the rates. That form is an alternating sum, so its
//! evaluation is guarded: a result escaping [0, 1] by more than 1e-6 is
//! refused and the caller is pointed at the Monte Carlo oracle.

use rayon::prelude::*;

use crate::curve::{CdfCurve, CurveKind, DensityCurve};
use crate::error::{Error, Result};
use crate::mle::{solve_mle, solve_weighted_mle, Dataset, WeightVector};
use crate::models::{check_param, Model};
use crate::moments::{fisher_info, Kahan};
use crate::numerics::roots::{find_root_monotone_cfg, RootCfg};
use crate::numerics::special::ln_gamma;
use crate::numerics::{Grid, RngStream};
use crate::Real;

/// Relative gap below which two rates in one sign block are treated as
/// duplicates and perturbed before entering the closed form.
const DUP_REL_GAP: f64 = 1e-9;

/// Multiplicative nudge applied to break near-duplicate rates.
const DUP_PERTURB: f64 = 1e-8;

/// Scores at a probe point, split by sign.
#[derive(Debug, Clone)]
pub struct WlbPartition<T> {
    /// g_i = l'(x_i; z) in data order.
    pub scores: Vec<T>,
    /// Indices with g_i > zero_tol.
    pub pos_idx: Vec<usize>,
    /// Indices with g_i < -zero_tol.
    pub neg_idx: Vec<usize>,
    /// Indices with |g_i| <= zero_tol, excluded from both blocks.
    pub zero_idx: Vec<usize>,
    /// Rates 1/g_i for the positive block, ascending, deduplicated.
    pub lambda_pos: Vec<T>,
    /// Rates 1/|g_i| for the negative block, ascending, deduplicated.
    pub lambda_neg: Vec<T>,
    /// Whether any rate needed a dedup nudge.
    pub perturbed: bool,
}

/// Split the per-observation scores at `z` by sign and convert to rates.
///
/// Scores within `1e-12 * max |g|` of zero are classified as zero: their
/// weighted contribution is negligible against either block, and their
/// rates would otherwise explode.
pub fn partition_scores<T: Real>(
    model: &(impl Model<T> + ?Sized),
    data: &Dataset<T>,
    z: T,
) -> Result<WlbPartition<T>> {
    data.validate_for(model)?;
    check_param(model, z)?;
    let scores = data
        .obs()
        .iter()
        .map(|&x| model.score_deriv(x, z))
        .collect::<Result<Vec<T>>>()?;
    let max_abs = scores.iter().fold(T::zero(), |a, &g| a.max(g.abs()));
    if !(max_abs > T::zero()) {
        return Err(Error::DegenerateScore {
            z: z.to_f64_lossy(),
        });
    }
    let zero_tol = T::of(1e-12) * max_abs;
    let mut pos_idx = Vec::new();
    let mut neg_idx = Vec::new();
    let mut zero_idx = Vec::new();
    let mut lambda_pos = Vec::new();
    let mut lambda_neg = Vec::new();
    for (i, &g) in scores.iter().enumerate() {
        if g > zero_tol {
            pos_idx.push(i);
            lambda_pos.push(g.recip());
        } else if g < -zero_tol {
            neg_idx.push(i);
            lambda_neg.push((-g).recip());
        } else {
            zero_idx.push(i);
        }
    }
    let mut perturbed = false;
    for lams in [&mut lambda_pos, &mut lambda_neg] {
        lams.sort_by(|a, b| a.partial_cmp(b).expect("rates are finite"));
        perturbed |= dedup_rates(lams);
    }
    Ok(WlbPartition {
        scores,
        pos_idx,
        neg_idx,
        zero_idx,
        lambda_pos,
        lambda_neg,
        perturbed,
    })
}

/// Nudge near-duplicate entries of an ascending rate list apart by a fixed
/// relative factor. The nudge cascades, preserving order. Deterministic.
fn dedup_rates<T: Real>(lams: &mut [T]) -> bool {
    let mut changed = false;
    for i in 1..lams.len() {
        let prev = lams[i - 1];
        let gap = (lams[i] - prev) / prev.max(lams[i]);
        if gap < T::of(DUP_REL_GAP) {
            lams[i] = prev * (T::one() + T::of(DUP_PERTURB));
            changed = true;
        }
    }
    changed
}

/// Density of a sum of independent exponentials with distinct rates.
///
/// f(t) = (prod lambda_k) sum_i q_i exp(-lambda_i t), where
/// q_i = prod_{k != i} 1/(lambda_k - lambda_i). Evaluated in signed-log
/// form with compensated summation; with rates sorted ascending the sign of
/// q_i is (-1)^i, so the alternation is explicit rather than rediscovered
/// from rounding.
pub fn hypoexp_density<T: Real>(lambdas: &[T], t: T) -> Result<T> {
    if lambdas.is_empty() {
        return Err(Error::Invalid(
            "hypoexponential needs at least one rate".into(),
        ));
    }
    if !(t >= T::zero()) {
        return Err(Error::Domain(format!(
            "hypoexponential density needs t >= 0, got {t}"
        )));
    }
    let mut sorted = lambdas.to_vec();
    for &l in &sorted {
        if !(l > T::zero()) || !l.is_finite() {
            return Err(Error::Invalid(format!(
                "rates must be positive and finite, got {l}"
            )));
        }
    }
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("rates are finite"));
    for w in sorted.windows(2) {
        if (w[1] - w[0]) / w[1] < T::of(1e-13) {
            return Err(Error::DuplicateRates(format!(
                "rates {} and {} coincide; perturb before calling",
                w[0], w[1]
            )));
        }
    }
    let ln_prod: T = sorted.iter().fold(T::zero(), |a, &l| a + l.ln());
    let mut acc = Kahan::<T>::default();
    let mut max_term = T::zero();
    for (i, &li) in sorted.iter().enumerate() {
        let mut ln_q = T::zero();
        for (k, &lk) in sorted.iter().enumerate() {
            if k != i {
                ln_q = ln_q - (lk - li).abs().ln();
            }
        }
        let sign = if i % 2 == 0 { T::one() } else { -T::one() };
        let term = (ln_prod + ln_q - li * t).exp();
        max_term = max_term.max(term);
        acc.add(sign * term);
    }
    let value = acc.value();
    if value < -T::of(1e-6) * max_term {
        return Err(Error::Unstable(format!(
            "hypoexponential density came out negative ({value}) at t = {t}; \
             the rates are too close for the closed form"
        )));
    }
    Ok(value.max(T::zero()))
}

/// Closed-form P(positive block >= negative block) for two disjoint sets of
/// hypoexponential rates. Empty blocks are the degenerate cases: no
/// positive scores means the event is impossible, no negative scores makes
/// it certain.
pub fn sign_split_prob<T: Real>(lambda_pos: &[T], lambda_neg: &[T]) -> Result<T> {
    if lambda_pos.is_empty() {
        return Ok(T::zero());
    }
    if lambda_neg.is_empty() {
        return Ok(T::one());
    }
    for lams in [lambda_pos, lambda_neg] {
        for w in lams.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::Invalid(
                    "rate blocks must be ascending and distinct".into(),
                ));
            }
        }
        for &l in lams {
            if !(l > T::zero()) || !l.is_finite() {
                return Err(Error::Invalid(format!(
                    "rates must be positive and finite, got {l}"
                )));
            }
        }
    }

    // ln q coefficients per block; with ascending rates sign(q_i) = (-1)^i.
    let ln_abs_q = |lams: &[T]| -> Vec<T> {
        (0..lams.len())
            .map(|i| {
                let mut s = T::zero();
                for (k, &lk) in lams.iter().enumerate() {
                    if k != i {
                        s = s - (lk - lams[i]).abs().ln();
                    }
                }
                s
            })
            .collect()
    };
    let ln_q_pos = ln_abs_q(lambda_pos);
    let ln_q_neg = ln_abs_q(lambda_neg);
    let ln_prod: T = lambda_pos
        .iter()
        .chain(lambda_neg.iter())
        .fold(T::zero(), |a, &l| a + l.ln());

    let mut acc = Kahan::<T>::default();
    for (l, &ll) in lambda_pos.iter().enumerate() {
        for (j, &lj) in lambda_neg.iter().enumerate() {
            let ln_term = ln_prod + ln_q_pos[l] + ln_q_neg[j] - ll.ln() - (ll + lj).ln();
            let sign = if (l + j) % 2 == 0 {
                T::one()
            } else {
                -T::one()
            };
            acc.add(sign * ln_term.exp());
        }
    }
    let p = acc.value();
    let slack = T::of(1e-6);
    if !(p >= -slack && p <= T::one() + slack) {
        return Err(Error::Unstable(format!(
            "sign-split closed form returned {p}, outside [0, 1]; \
             cancellation has destroyed it, use the Monte Carlo oracle"
        )));
    }
    Ok(p.max(T::zero()).min(T::one()))
}

/// Exact conditional CDF of the weighted MLE on `grid`, given `data`.
pub fn wlb_exact_cdf<T: Real>(
    model: &(impl Model<T> + ?Sized),
    data: &Dataset<T>,
    grid: &Grid<T>,
) -> Result<CdfCurve<T>> {
    let per_point = grid
        .points()
        .par_iter()
        .map(|&z| {
            let part = partition_scores(model, data, z)?;
            let p = sign_split_prob(&part.lambda_pos, &part.lambda_neg)?;
            Ok((p, part.perturbed))
        })
        .collect::<Result<Vec<(T, bool)>>>()?;
    let values = per_point.iter().map(|p| p.0).collect();
    let perturbed = per_point.iter().filter(|p| p.1).count();
    let mut curve = CdfCurve::new(grid.clone(), values, CurveKind::WlbExact)?;
    if perturbed > 0 {
        curve
            .notes
            .push(format!("{perturbed} points required rate deduplication"));
    }
    curve.meta.model = Some(model.id());
    curve.meta.n = Some(data.n());
    Ok(curve)
}

/// Monte Carlo estimate of the same conditional probability, with its
/// binomial standard error. The estimand is P(sum_i v_i g_i >= 0) over
/// standard exponential weights; nothing is refit, so this is cheap and is
/// the reference the closed form is audited against.
#[derive(Debug, Clone, Copy)]
pub struct OracleEstimate<T> {
    pub p: T,
    pub se: T,
    pub draws: u64,
}

pub fn wlb_mc_oracle<T: Real>(
    model: &(impl Model<T> + ?Sized),
    data: &Dataset<T>,
    z: T,
    draws: u64,
    rng: &RngStream,
) -> Result<OracleEstimate<T>> {
    if draws < 1000 {
        return Err(Error::Invalid(format!(
            "oracle needs at least 1000 draws for a usable standard error, got {draws}"
        )));
    }
    let part = partition_scores(model, data, z)?;
    let scores = part.scores;
    const CHUNK: u64 = 65_536;
    let n_chunks = draws.div_ceil(CHUNK);
    let hits: u64 = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut sub = rng.substream(c);
            let in_chunk = CHUNK.min(draws - c * CHUNK);
            let mut h = 0u64;
            for _ in 0..in_chunk {
                let mut s = T::zero();
                for &g in &scores {
                    s = s + rng_weighted(&mut sub, g);
                }
                h += (s >= T::zero()) as u64;
            }
            h
        })
        .sum();
    let p = T::of(hits as f64) / T::of(draws as f64);
    let se = (p * (T::one() - p) / T::of(draws as f64)).sqrt();
    Ok(OracleEstimate { p, se, draws })
}

#[inline]
fn rng_weighted<T: Real>(rng: &mut RngStream, g: T) -> T {
    rng.standard_exp::<T>() * g
}

/// One draw of the weighted MLE: fresh standard exponential weights, refit.
pub fn wlb_sample<T: Real>(
    model: &(impl Model<T> + ?Sized),
    data: &Dataset<T>,
    rng: &mut RngStream,
) -> Result<T> {
    let w = WeightVector::standard_exp(data.n(), rng)?;
    solve_weighted_mle(model, data, &w)
}

/// Normal approximation from the score statistics alone:
/// Phi(sum g_i / sqrt(sum g_i^2)) at each probe point.
pub fn wlb_normal_approx<T: Real>(
    model: &(impl Model<T> + ?Sized),
    data: &Dataset<T>,
    grid: &Grid<T>,
) -> Result<CdfCurve<T>> {
    let mut values = Vec::with_capacity(grid.len());
    let mut saturated = 0usize;
    for &z in grid.iter() {
        let part = partition_scores(model, data, z)?;
        let mut sum = Kahan::<T>::default();
        let mut sumsq = Kahan::<T>::default();
        for &g in &part.scores {
            sum.add(g);
            sumsq.add(g * g);
        }
        let (v, sat) = crate::asymptotic::phi_sat(sum.value() / sumsq.value().sqrt())?;
        saturated += sat as usize;
        values.push(v);
    }
    let mut curve = CdfCurve::new(grid.clone(), values, CurveKind::WlbNormal)?;
    if saturated > 0 {
        curve
            .notes
            .push(format!("{saturated} points saturated to exact 0/1"));
    }
    curve.meta.model = Some(model.id());
    curve.meta.n = Some(data.n());
    Ok(curve)
}

/// Fisher-scaled normal approximation centered at the unweighted MLE:
/// Phi(sqrt(n) (z - mle) sqrt(I(z))), information evaluated at the probe
/// point.
pub fn wlb_fisher_approx<T: Real>(
    model: &(impl Model<T> + ?Sized),
    data: &Dataset<T>,
    grid: &Grid<T>,
) -> Result<CdfCurve<T>> {
    let hat = solve_mle(model, data)?;
    let sqrt_n = T::of(data.n() as f64).sqrt();
    let mut values = Vec::with_capacity(grid.len());
    let mut saturated = 0usize;
    for &z in grid.iter() {
        check_param(model, z)?;
        let info = fisher_info(model, z)?;
        let (v, sat) = crate::asymptotic::phi_sat(sqrt_n * (z - hat) * info.sqrt())?;
        saturated += sat as usize;
        values.push(v);
    }
    let mut curve = CdfCurve::new(grid.clone(), values, CurveKind::WlbFisher)?;
    if saturated > 0 {
        curve
            .notes
            .push(format!("{saturated} points saturated to exact 0/1"));
    }
    curve.meta.model = Some(model.id());
    curve.meta.n = Some(data.n());
    Ok(curve)
}

/// Probability-matching sampler: map a standard normal draw zeta to the
/// theta solving sqrt(n) (theta - mle) sqrt(I(theta)) = zeta. The map is
/// checked to be increasing on the working bracket before any root is
/// trusted; models whose information decays faster than (theta - mle)
/// grows would silently fold the map otherwise.
pub struct ProbMatching<'a, T, M: ?Sized> {
    model: &'a M,
    theta_hat: T,
    sqrt_n: T,
    /// Half-width of the initial bracket: 10 standard errors.
    half_width: T,
}

impl<'a, T: Real, M: Model<T> + ?Sized> ProbMatching<'a, T, M> {
    pub fn new(model: &'a M, data: &Dataset<T>) -> Result<Self> {
        let theta_hat = solve_mle(model, data)?;
        let info_hat = fisher_info(model, theta_hat)?;
        let sqrt_n = T::of(data.n() as f64).sqrt();
        let half_width = T::of(10.0) / (sqrt_n * info_hat.sqrt());
        let pm = ProbMatching {
            model,
            theta_hat,
            sqrt_n,
            half_width,
        };
        pm.check_monotone()?;
        Ok(pm)
    }

    pub fn theta_hat(&self) -> T {
        self.theta_hat
    }

    fn pivot(&self, theta: T) -> Result<T> {
        let info = fisher_info(self.model, theta)?;
        Ok(self.sqrt_n * (theta - self.theta_hat) * info.sqrt())
    }

    /// Probe the pivot on nine points across the bracket; any strict
    /// decrease disqualifies the sampler for this model/fit.
    fn check_monotone(&self) -> Result<()> {
        let sup = self.model.param_support();
        let lo = clamp_into(
            self.theta_hat - self.half_width,
            self.theta_hat,
            sup.lo,
            true,
        );
        let hi = clamp_into(
            self.theta_hat + self.half_width,
            self.theta_hat,
            sup.hi,
            false,
        );
        let probes = 9;
        let mut prev: Option<T> = None;
        for i in 0..probes {
            let f = T::of(i as f64) / T::of((probes - 1) as f64);
            let theta = lo + (hi - lo) * f;
            let value = self.pivot(theta)?;
            if let Some(p) = prev {
                if value < p {
                    return Err(Error::NonMonotone {
                        lo: lo.to_f64_lossy(),
                        hi: hi.to_f64_lossy(),
                    });
                }
            }
            prev = Some(value);
        }
        Ok(())
    }

    /// Solve the matching equation for a given standard normal quantile.
    pub fn solve(&self, zeta: T) -> Result<T> {
        let sup = self.model.param_support();
        let g = |theta: T| match self.pivot(theta) {
            Ok(v) => v - zeta,
            Err(_) => T::nan(),
        };
        let cfg = RootCfg {
            initial_step: self.half_width,
            ..RootCfg::default()
        };
        find_root_monotone_cfg(g, self.theta_hat, (sup.lo, sup.hi), &cfg)
    }

    /// One sampler draw.
    pub fn sample(&self, rng: &mut RngStream) -> Result<T> {
        self.solve(rng.standard_normal())
    }
}

fn clamp_into<T: Real>(candidate: T, anchor: T, bound: T, is_lo: bool) -> T {
    if bound.is_finite() {
        if is_lo {
            if candidate <= bound {
                return bound + (anchor - bound) * T::of(0.5);
            }
        } else if candidate >= bound {
            return bound - (bound - anchor) * T::of(0.5);
        }
    }
    candidate
}

/// One probability-matching draw for `data` (convenience over
/// [`ProbMatching`]; batch callers should build the struct once).
pub fn probability_matching_sample<T: Real>(
    model: &(impl Model<T> + ?Sized),
    data: &Dataset<T>,
    rng: &mut RngStream,
) -> Result<T> {
    ProbMatching::new(model, data)?.sample(rng)
}

/// Jeffreys-prior posterior density for the exponential model on `grid`:
/// Gamma with shape n and rate sum(x_i).
pub fn jeffreys_posterior_exponential<T: Real>(
    data: &Dataset<T>,
    grid: &Grid<T>,
) -> Result<DensityCurve<T>> {
    let mut rate = Kahan::<T>::default();
    for (i, &x) in data.obs().iter().enumerate() {
        if !(x > T::zero()) {
            return Err(Error::Domain(format!(
                "observation {i} = {x} outside the exponential support"
            )));
        }
        rate.add(x);
    }
    let rate = rate.value();
    let shape = T::of(data.n() as f64);
    let ln_norm = shape * rate.ln() - ln_gamma(shape)?;
    let mut values = Vec::with_capacity(grid.len());
    for &z in grid.iter() {
        if !(z > T::zero()) {
            return Err(Error::Domain(format!(
                "rate parameter must be positive, got {z}"
            )));
        }
        values.push((ln_norm + (shape - T::one()) * z.ln() - rate * z).exp());
    }
    let mut curve = DensityCurve::new(grid.clone(), values, CurveKind::JeffreysPosterior)?;
    curve.meta.model = Some("exponential".into());
    curve.meta.n = Some(data.n());
    Ok(curve)
}
