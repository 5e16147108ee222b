//! Adaptive quadrature on a 7-15 Gauss-Kronrod pair.
//!
//! Endpoints may be infinite; those directions are folded onto (0, 1] with
//! the rational substitution x = a + (1 - t)/t before subdivision starts.
//! The error model per panel follows the classical QUADPACK scaling of the
//! Gauss/Kronrod discrepancy against the scaled integrand variation.

use crate::error::{Error, Result};
use crate::Real;

/// Kronrod abscissae for [-1, 1], nonnegative half (7-point Gauss core).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_89,
    0.209_482_141_084_727_83,
];

const WG: [f64; 4] = [
    0.129_484_966_168_869_69,
    0.279_705_391_489_276_67,
    0.381_830_050_505_118_94,
    0.417_959_183_673_469_4,
];

/// Result of an adaptive integration.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature<T> {
    pub value: T,
    /// Conservative absolute error bound.
    pub error: T,
    pub evaluations: usize,
}

/// Default absolute accuracy target; widened for scalars whose epsilon
/// cannot support 1e-9.
pub fn default_tol<T: Real>() -> T {
    T::of(1e-9).max(T::epsilon() * T::of(100.0))
}

/// Integrate `f` over (lo, hi) to the default accuracy target.
/// Infinite endpoints are allowed; NaN endpoints are not.
pub fn integrate_1d<T: Real>(f: impl Fn(T) -> T, lo: T, hi: T) -> Result<T> {
    integrate_1d_tol(f, lo, hi, default_tol::<T>()).map(|q| q.value)
}

const MAX_PANELS: usize = 256;

/// Integrate `f` over (lo, hi) to absolute accuracy `tol`.
///
/// Fails with [`Error::Accuracy`] if subdivision cannot certify the target,
/// carrying the best estimate and its error bound. Non-finite integrand
/// values poison the enclosing panel, which is then subdivided away from;
/// if they persist at the smallest panel width the failure is reported.
pub fn integrate_1d_tol<T: Real>(
    f: impl Fn(T) -> T,
    lo: T,
    hi: T,
    tol: T,
) -> Result<Quadrature<T>> {
    if lo.is_nan() || hi.is_nan() {
        return Err(Error::Invalid("integration endpoint is NaN".into()));
    }
    if !(lo < hi) {
        return Err(Error::Invalid(format!(
            "integration interval is empty: [{lo}, {hi}]"
        )));
    }
    if !(tol > T::zero()) {
        return Err(Error::Invalid(format!(
            "accuracy target must be positive, got {tol}"
        )));
    }
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => adaptive(f, lo, hi, tol),
        (true, false) => adaptive(
            |t| {
                let x = lo + (T::one() - t) / t;
                scaled_eval(&f, x, t)
            },
            T::zero(),
            T::one(),
            tol,
        ),
        (false, true) => adaptive(
            |t| {
                let x = hi - (T::one() - t) / t;
                scaled_eval(&f, x, t)
            },
            T::zero(),
            T::one(),
            tol,
        ),
        (false, false) => adaptive(
            |t| {
                let x = (T::one() - t) / t;
                scaled_eval(&f, x, t) + scaled_eval(&f, -x, t)
            },
            T::zero(),
            T::one(),
            tol,
        ),
    }
}

/// Integrate `f` over (lo, hi) with finite endpoints softened by the
/// square-root substitution x = endpoint +/- u^2.
///
/// An integrable algebraic blow-up (x - lo)^p with p > -1 becomes u^(2p+1),
/// which subdivision resolves quickly; without the substitution the panels
/// chase the singular point into rounding range, eventually landing a node
/// on the open endpoint itself. Density-weighted integrands over open
/// supports should come through here.
pub fn integrate_softened_tol<T: Real>(
    f: impl Fn(T) -> T,
    lo: T,
    hi: T,
    tol: T,
) -> Result<Quadrature<T>> {
    if lo.is_nan() || hi.is_nan() {
        return Err(Error::Invalid("integration endpoint is NaN".into()));
    }
    if !(lo < hi) {
        return Err(Error::Invalid(format!(
            "integration interval is empty: [{lo}, {hi}]"
        )));
    }
    let two = T::of(2.0);
    match (lo.is_finite(), hi.is_finite()) {
        (false, false) => integrate_1d_tol(f, lo, hi, tol),
        (true, false) => integrate_1d_tol(
            |u| {
                let x = lo + u * u;
                // u^2 below one ulp of the endpoint: the softened integrand
                // vanishes there in the limit
                if !(x > lo) {
                    return T::zero();
                }
                f(x) * two * u
            },
            T::zero(),
            T::infinity(),
            tol,
        ),
        (false, true) => integrate_1d_tol(
            |u| {
                let x = hi - u * u;
                if !(x < hi) {
                    return T::zero();
                }
                f(x) * two * u
            },
            T::zero(),
            T::infinity(),
            tol,
        ),
        (true, true) => {
            let mid = lo + (hi - lo) * T::of(0.5);
            let half_tol = tol * T::of(0.5);
            let left = integrate_1d_tol(
                |u| {
                    let x = lo + u * u;
                    if !(x > lo) {
                        return T::zero();
                    }
                    f(x) * two * u
                },
                T::zero(),
                (mid - lo).sqrt(),
                half_tol,
            )?;
            let right = integrate_1d_tol(
                |u| {
                    let x = hi - u * u;
                    if !(x < hi) {
                        return T::zero();
                    }
                    f(x) * two * u
                },
                T::zero(),
                (hi - mid).sqrt(),
                half_tol,
            )?;
            Ok(Quadrature {
                value: left.value + right.value,
                error: left.error + right.error,
                evaluations: left.evaluations + right.evaluations,
            })
        }
    }
}

/// Evaluate f(x) / t^2 guarding the t -> 0 limit: an integrable tail decays
/// faster than t^2 grows, so a zero value short-circuits before the weight
/// can manufacture inf * 0.
fn scaled_eval<T: Real>(f: &impl Fn(T) -> T, x: T, t: T) -> T {
    if !x.is_finite() {
        return T::zero();
    }
    let v = f(x);
    if v == T::zero() {
        return T::zero();
    }
    v / (t * t)
}

#[derive(Debug, Clone, Copy)]
struct Panel<T> {
    a: T,
    b: T,
    value: T,
    error: T,
}

fn adaptive<T: Real>(f: impl Fn(T) -> T, a: T, b: T, tol: T) -> Result<Quadrature<T>> {
    let mut panels: Vec<Panel<T>> = Vec::with_capacity(64);
    let mut evals = 15usize;
    panels.push(qk15(&f, a, b));
    loop {
        let mut value = T::zero();
        let mut error = T::zero();
        for p in &panels {
            value = value + p.value;
            error = error + p.error;
        }
        if error <= tol && error.is_finite() {
            return Ok(Quadrature {
                value,
                error,
                evaluations: evals,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| cmp_err(x.1.error, y.1.error))
            .map(|(i, _)| i)
            .expect("panel list is nonempty");
        let Panel { a: pa, b: pb, .. } = panels[worst];
        let mid = (pa + pb) * T::of(0.5);
        let width_floor = T::epsilon() * T::of(4.0) * pa.abs().max(pb.abs()).max(T::one());
        if panels.len() >= MAX_PANELS || pb - pa <= width_floor || !(pa < mid && mid < pb) {
            return Err(Error::Accuracy {
                estimate: value.to_f64_lossy(),
                error: error.to_f64_lossy(),
                target: tol.to_f64_lossy(),
            });
        }
        panels[worst] = qk15(&f, pa, mid);
        panels.push(qk15(&f, mid, pb));
        evals += 30;
    }
}

/// NaN compares as the largest error so poisoned panels are split first.
fn cmp_err<T: Real>(x: T, y: T) -> std::cmp::Ordering {
    match (x.is_nan(), y.is_nan()) {
        (true, true) => std::cmp::Ordering::Equal,
        (true, false) => std::cmp::Ordering::Greater,
        (false, true) => std::cmp::Ordering::Less,
        (false, false) => x.partial_cmp(&y).unwrap_or(std::cmp::Ordering::Equal),
    }
}

fn qk15<T: Real>(f: &impl Fn(T) -> T, a: T, b: T) -> Panel<T> {
    let half = T::of(0.5);
    let center = (a + b) * half;
    let hlgth = (b - a) * half;
    let fc = f(center);

    let mut fv1 = [T::zero(); 7];
    let mut fv2 = [T::zero(); 7];
    let mut resk = fc * T::of(WGK[7]);
    let mut resg = fc * T::of(WG[3]);
    let mut resabs = resk.abs();
    for j in 0..7 {
        let dx = hlgth * T::of(XGK[j]);
        fv1[j] = f(center - dx);
        fv2[j] = f(center + dx);
        let fsum = fv1[j] + fv2[j];
        resk = resk + T::of(WGK[j]) * fsum;
        if j % 2 == 1 {
            resg = resg + T::of(WG[j / 2]) * fsum;
        }
        resabs = resabs + T::of(WGK[j]) * (fv1[j].abs() + fv2[j].abs());
    }

    let reskh = resk * half;
    let mut resasc = T::of(WGK[7]) * (fc - reskh).abs();
    for j in 0..7 {
        resasc = resasc + T::of(WGK[j]) * ((fv1[j] - reskh).abs() + (fv2[j] - reskh).abs());
    }

    let value = resk * hlgth;
    resabs = resabs * hlgth.abs();
    resasc = resasc * hlgth.abs();
    let mut err = ((resk - resg) * hlgth).abs();
    if resasc > T::zero() && err > T::zero() {
        let scale = (T::of(200.0) * err / resasc).powf(T::of(1.5)).min(T::one());
        err = resasc * scale;
    }
    let round_floor = T::epsilon() * T::of(50.0) * resabs;
    if round_floor > T::min_positive_value() {
        err = err.max(round_floor);
    }
    Panel {
        a,
        b,
        value,
        error: err,
    }
}
