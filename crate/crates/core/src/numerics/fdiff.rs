//! Central finite differences with scale-aware steps.

use crate::error::Result;
use crate::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffOrder {
    First,
    Second,
}

/// Default step for a central difference at `z`: eps^(1/3) scaled for first
/// derivatives, eps^(1/4) for second, both relative to max(|z|, 1).
pub fn default_step<T: Real>(z: T, order: DiffOrder) -> T {
    let scale = z.abs().max(T::one());
    match order {
        DiffOrder::First => scale * T::epsilon().cbrt(),
        DiffOrder::Second => scale * T::epsilon().sqrt().sqrt(),
    }
}

/// Central difference estimate of f' or f'' at `z`.
///
/// `f` may fail (for example a quadrature under the hood); the error is
/// passed straight through.
pub fn finite_diff<T, F>(mut f: F, z: T, order: DiffOrder) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    let h = default_step(z, order);
    match order {
        DiffOrder::First => central_first(&mut f, z, h),
        DiffOrder::Second => central_second(&mut f, z, h),
    }
}

/// (f(z + h) - f(z - h)) / 2h with an explicit step.
pub fn central_first<T, F>(f: &mut F, z: T, h: T) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    let hi = f(z + h)?;
    let lo = f(z - h)?;
    Ok((hi - lo) / (h + h))
}

/// (f(z + h) - 2 f(z) + f(z - h)) / h^2 with an explicit step.
pub fn central_second<T, F>(f: &mut F, z: T, h: T) -> Result<T>
where
    T: Real,
    F: FnMut(T) -> Result<T>,
{
    let hi = f(z + h)?;
    let mid = f(z)?;
    let lo = f(z - h)?;
    Ok((hi - (mid + mid) + lo) / (h * h))
}
