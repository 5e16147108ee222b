//! Root finding for nondecreasing functions on an open interval.
//!
//! Callers hand in a point estimate of where the root lives; the bracket
//! grows geometrically from there (doubling toward infinite support ends,
//! halving the gap toward finite ones) until the function changes sign,
//! then plain bisection finishes. Bisection is deliberate: the objectives
//! here are mean scores whose derivatives can blow up near support edges,
//! where faster methods lose their brackets.

use crate::error::{Error, Result};
use crate::Real;

#[derive(Debug, Clone, Copy)]
pub struct RootCfg<T> {
    /// Residual tolerance: |f(root)| <= atol ends the search.
    pub atol: T,
    /// Width tolerance: bracket width <= rtol * |root| also ends it.
    pub rtol: T,
    /// First step away from the hint.
    pub initial_step: T,
    /// Bracket growth attempts per side.
    pub max_expand: u32,
    pub max_bisect: u32,
}

impl<T: Real> Default for RootCfg<T> {
    fn default() -> Self {
        RootCfg {
            atol: T::of(1e-10).max(T::epsilon() * T::of(100.0)),
            rtol: T::of(1e-10).max(T::epsilon() * T::of(100.0)),
            initial_step: T::one(),
            max_expand: 60,
            max_bisect: 200,
        }
    }
}

/// Find the root of a nondecreasing `f` inside the open interval `support`,
/// starting the bracket search at `hint`. Default tolerances.
pub fn find_root_monotone<T: Real>(f: impl Fn(T) -> T, hint: T, support: (T, T)) -> Result<T> {
    find_root_monotone_cfg(f, hint, support, &RootCfg::default())
}

pub fn find_root_monotone_cfg<T: Real>(
    f: impl Fn(T) -> T,
    hint: T,
    support: (T, T),
    cfg: &RootCfg<T>,
) -> Result<T> {
    let (slo, shi) = support;
    if !(slo < shi) {
        return Err(Error::Invalid(format!("empty support ({slo}, {shi})")));
    }
    if !hint.is_finite() || !(slo < hint && hint < shi) {
        return Err(Error::Invalid(format!(
            "bracket hint {hint} outside support ({slo}, {shi})"
        )));
    }

    let fh = checked(&f, hint)?;
    if fh.abs() <= cfg.atol {
        return Ok(hint);
    }

    // Grow each side until it straddles zero: the low end needs f <= 0, the
    // high end f >= 0. Toward an infinite support end the offset doubles;
    // toward a finite one the remaining gap halves, so the probe never
    // leaves the open interval.
    let mut lo = hint;
    let mut f_lo = fh;
    let mut step = cfg.initial_step;
    let mut expand = 0;
    while f_lo > T::zero() {
        if expand >= cfg.max_expand {
            return Err(no_root(lo, hint, f_lo, fh));
        }
        lo = if slo.is_finite() {
            slo + (lo - slo) * T::of(0.5)
        } else {
            let next = hint - step;
            step = step + step;
            next
        };
        f_lo = checked(&f, lo)?;
        expand += 1;
    }

    let mut hi = hint;
    let mut f_hi = fh;
    step = cfg.initial_step;
    expand = 0;
    while f_hi < T::zero() {
        if expand >= cfg.max_expand {
            return Err(no_root(hint, hi, fh, f_hi));
        }
        hi = if shi.is_finite() {
            shi - (shi - hi) * T::of(0.5)
        } else {
            let next = hint + step;
            step = step + step;
            next
        };
        f_hi = checked(&f, hi)?;
        expand += 1;
    }
    if f_lo.abs() <= cfg.atol {
        return Ok(lo);
    }
    if f_hi.abs() <= cfg.atol {
        return Ok(hi);
    }

    // Invariant: f(lo) < 0 < f(hi).
    for _ in 0..cfg.max_bisect {
        let mid = (lo + hi) * T::of(0.5);
        if !(lo < mid && mid < hi) {
            // Bracket collapsed to adjacent floats.
            return Ok(mid);
        }
        let fm = checked(&f, mid)?;
        if fm.abs() <= cfg.atol {
            return Ok(mid);
        }
        if fm < T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= cfg.rtol * mid.abs() {
            return Ok((lo + hi) * T::of(0.5));
        }
    }
    Ok((lo + hi) * T::of(0.5))
}

fn checked<T: Real>(f: &impl Fn(T) -> T, x: T) -> Result<T> {
    let v = f(x);
    if v.is_nan() {
        return Err(Error::Unstable(format!("objective returned NaN at {x}")));
    }
    Ok(v)
}

fn no_root<T: Real>(lo: T, hi: T, f_lo: T, f_hi: T) -> Error {
    Error::NoRoot {
        lo: lo.to_f64_lossy(),
        hi: hi.to_f64_lossy(),
        f_lo: f_lo.to_f64_lossy(),
        f_hi: f_hi.to_f64_lossy(),
    }
}
