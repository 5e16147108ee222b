//! Strictly increasing evaluation grids.

use crate::error::{Error, Result};
use crate::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    points: Vec<T>,
}

impl<T: Real> Grid<T> {
    /// Wrap an explicit list of points; must be finite and strictly increasing.
    pub fn new(points: Vec<T>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Invalid("grid must be nonempty".into()));
        }
        for (i, &p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(Error::Invalid(format!("grid point {i} is not finite: {p}")));
            }
            if i > 0 && !(points[i - 1] < p) {
                return Err(Error::Invalid(format!(
                    "grid must be strictly increasing, points {} and {i} are {} and {p}",
                    i - 1,
                    points[i - 1]
                )));
            }
        }
        Ok(Grid { points })
    }

    /// `n` equally spaced points from `lo` to `hi` inclusive, endpoints exact.
    pub fn linspace(lo: T, hi: T, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Invalid(format!("linspace needs n >= 2, got {n}")));
        }
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Invalid(format!(
                "linspace needs finite lo < hi, got [{lo}, {hi}]"
            )));
        }
        let span = hi - lo;
        let last = T::of((n - 1) as f64);
        let mut points = Vec::with_capacity(n);
        for i in 0..n {
            points.push(lo + span * (T::of(i as f64) / last));
        }
        points[n - 1] = hi;
        Grid::new(points)
    }

    pub fn points(&self) -> &[T] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn first(&self) -> T {
        self.points[0]
    }

    pub fn last(&self) -> T {
        *self.points.last().expect("grid is nonempty")
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.points.iter()
    }
}
