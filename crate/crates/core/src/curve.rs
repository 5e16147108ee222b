//! Curves evaluated on a grid: distribution functions and densities, plus
//! the small amount of metadata the CSV writers and experiment assertions
//! need (what produced the curve, and any numerical flags raised on the way).

use crate::error::{Error, Result};
use crate::numerics::Grid;
use crate::Real;

/// What produced a curve; doubles as the `method` column in CSV output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CurveKind {
    Refined,
    NormalApprox,
    Edgeworth,
    EdgeworthStd,
    ExactExponential,
    Empirical,
    WlbExact,
    WlbNormal,
    WlbFisher,
    WlbEcdf,
    ProbMatchEcdf,
    WlbDensity,
    JeffreysPosterior,
    Density,
}

impl CurveKind {
    pub fn label(self) -> &'static str {
        match self {
            CurveKind::Refined => "refined",
            CurveKind::NormalApprox => "normal",
            CurveKind::Edgeworth => "edgeworth",
            CurveKind::EdgeworthStd => "edgeworth_std",
            CurveKind::ExactExponential => "exact",
            CurveKind::Empirical => "empirical",
            CurveKind::WlbExact => "wlb_exact",
            CurveKind::WlbNormal => "wlb_normal",
            CurveKind::WlbFisher => "wlb_fisher",
            CurveKind::WlbEcdf => "wlb_ecdf",
            CurveKind::ProbMatchEcdf => "probmatch_ecdf",
            CurveKind::WlbDensity => "wlb_density",
            CurveKind::JeffreysPosterior => "jeffreys_posterior",
            CurveKind::Density => "density",
        }
    }
}

impl std::fmt::Display for CurveKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// Provenance of a curve, carried into CSV/JSON sidecars.
#[derive(Debug, Clone, Default)]
pub struct CurveMeta {
    pub model: Option<String>,
    pub n: Option<usize>,
    pub theta_star: Option<f64>,
    pub moments: Option<String>,
    pub seed: Option<(u64, u64)>,
}

/// Values that must only creep outside [0, 1] by rounding noise are pulled
/// back; anything worse is the caller's bug and is rejected.
const UNIT_SLACK: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct CdfCurve<T> {
    grid: Grid<T>,
    values: Vec<T>,
    kind: CurveKind,
    pub meta: CurveMeta,
    /// Numerical events observed while building the curve (saturation,
    /// clamped variances, clipped expansion values, perturbed rates).
    pub notes: Vec<String>,
}

impl<T: Real> CdfCurve<T> {
    pub fn new(grid: Grid<T>, values: Vec<T>, kind: CurveKind) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::Invalid(format!(
                "curve has {} grid points but {} values",
                grid.len(),
                values.len()
            )));
        }
        let slack = T::of(UNIT_SLACK);
        let mut clipped = values;
        for v in &mut clipped {
            if !v.is_finite() || *v < -slack || *v > T::one() + slack {
                return Err(Error::Invalid(format!(
                    "distribution value {v} outside [0, 1]"
                )));
            }
            *v = v.max(T::zero()).min(T::one());
        }
        Ok(CdfCurve {
            grid,
            values: clipped,
            kind,
            meta: CurveMeta::default(),
            notes: Vec::new(),
        })
    }

    /// Empirical CDF of `sample` evaluated on `grid`.
    pub fn empirical(sample: &[T], grid: Grid<T>) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::Invalid("empirical CDF of an empty sample".into()));
        }
        let mut sorted = sample.to_vec();
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("sample values are comparable"));
        if !sorted[0].is_finite() || !sorted[sorted.len() - 1].is_finite() {
            return Err(Error::Invalid(
                "empirical CDF of a non-finite sample".into(),
            ));
        }
        let k = T::of(sorted.len() as f64);
        let values = grid
            .iter()
            .map(|&z| T::of(count_le(&sorted, z) as f64) / k)
            .collect();
        CdfCurve::new(grid, values, CurveKind::Empirical)
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: CurveKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Nondecreasing up to `slack` of backward wiggle per step.
    pub fn is_nondecreasing(&self, slack: T) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0] - slack)
    }

    /// Largest absolute gap against another curve on the same grid.
    pub fn sup_distance(&self, other: &CdfCurve<T>) -> Result<T> {
        if self.grid.points() != other.grid.points() {
            return Err(Error::Invalid(
                "sup distance requires identical grids".into(),
            ));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b).abs())
            .fold(T::zero(), T::max))
    }

    /// First grid index at which the curve reaches probability `p`.
    pub fn crossing_index(&self, p: T) -> Option<usize> {
        self.values.iter().position(|&v| v >= p)
    }
}

/// Number of elements of the sorted slice that are <= z.
pub fn count_le<T: Real>(sorted: &[T], z: T) -> usize {
    sorted.partition_point(|&x| x <= z)
}

/// Kolmogorov-Smirnov distance between a sample and a reference CDF.
/// `sorted` must be ascending. The supremum is attained at a jump, so both
/// one-sided gaps are checked at every sample point.
pub fn ks_one_sample<T: Real>(sorted: &[T], cdf: impl Fn(T) -> Result<T>) -> Result<T> {
    if sorted.is_empty() {
        return Err(Error::Invalid("KS distance of an empty sample".into()));
    }
    let k = T::of(sorted.len() as f64);
    let mut sup = T::zero();
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x)?;
        let hi = T::of((i + 1) as f64) / k - f;
        let lo = f - T::of(i as f64) / k;
        sup = sup.max(hi).max(lo);
    }
    Ok(sup)
}

/// Two-sample Kolmogorov-Smirnov distance; both inputs must be ascending.
pub fn ks_two_sample<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Invalid("KS distance of an empty sample".into()));
    }
    let (na, nb) = (T::of(a.len() as f64), T::of(b.len() as f64));
    let mut i = 0usize;
    let mut j = 0usize;
    let mut sup = T::zero();
    while i < a.len() && j < b.len() {
        if a[i] <= b[j] {
            i += 1;
        } else {
            j += 1;
        }
        let d = (T::of(i as f64) / na - T::of(j as f64) / nb).abs();
        sup = sup.max(d);
    }
    Ok(sup)
}

#[derive(Debug, Clone)]
pub struct DensityCurve<T> {
    grid: Grid<T>,
    values: Vec<T>,
    kind: CurveKind,
    pub meta: CurveMeta,
    pub notes: Vec<String>,
}

impl<T: Real> DensityCurve<T> {
    /// Values must be finite and nonnegative (tiny negative rounding noise
    /// is clipped to zero).
    pub fn new(grid: Grid<T>, values: Vec<T>, kind: CurveKind) -> Result<Self> {
        if grid.len() != values.len() {
            return Err(Error::Invalid(format!(
                "curve has {} grid points but {} values",
                grid.len(),
                values.len()
            )));
        }
        let slack = T::of(UNIT_SLACK);
        let mut clipped = values;
        for v in &mut clipped {
            if !v.is_finite() || *v < -slack {
                return Err(Error::Invalid(format!("density value {v} is negative")));
            }
            *v = v.max(T::zero());
        }
        Ok(DensityCurve {
            grid,
            values: clipped,
            kind,
            meta: CurveMeta::default(),
            notes: Vec::new(),
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn kind(&self) -> CurveKind {
        self.kind
    }

    pub fn with_kind(mut self, kind: CurveKind) -> Self {
        self.kind = kind;
        self
    }

    /// Trapezoid mass over the grid span.
    pub fn mass(&self) -> T {
        self.trapezoid(|_| T::one())
    }

    /// Mean of the density restricted to the grid, normalized by its mass.
    pub fn mean(&self) -> Result<T> {
        let m = self.mass();
        if !(m > T::zero()) {
            return Err(Error::Invalid("density has zero mass on its grid".into()));
        }
        Ok(self.trapezoid(|z| z) / m)
    }

    /// Variance of the density restricted to the grid, normalized by mass.
    pub fn variance(&self) -> Result<T> {
        let m = self.mass();
        if !(m > T::zero()) {
            return Err(Error::Invalid("density has zero mass on its grid".into()));
        }
        let mean = self.trapezoid(|z| z) / m;
        Ok(self.trapezoid(|z| (z - mean) * (z - mean)) / m)
    }

    fn trapezoid(&self, weight: impl Fn(T) -> T) -> T {
        let pts = self.grid.points();
        let half = T::of(0.5);
        let mut acc = T::zero();
        for i in 1..pts.len() {
            let w = pts[i] - pts[i - 1];
            let a = weight(pts[i - 1]) * self.values[i - 1];
            let b = weight(pts[i]) * self.values[i];
            acc = acc + (a + b) * half * w;
        }
        acc
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cdf_values_outside_unit_are_rejected_or_clipped() {
        let g = Grid::linspace(0.0, 1.0, 3).unwrap();
        assert!(CdfCurve::new(g.clone(), vec![0.0, 0.5, 1.5], CurveKind::Refined).is_err());
        assert!(CdfCurve::new(g.clone(), vec![-0.1, 0.5, 1.0], CurveKind::Refined).is_err());
        assert!(CdfCurve::new(g.clone(), vec![0.0, f64::NAN, 1.0], CurveKind::Refined).is_err());
        // rounding-level excursions are pulled back to the boundary
        let c = CdfCurve::new(
            g.clone(),
            vec![-1e-12, 0.5, 1.0 + 1e-12],
            CurveKind::Refined,
        )
        .unwrap();
        assert_eq!(c.values()[0], 0.0);
        assert_eq!(c.values()[2], 1.0);
        assert!(CdfCurve::new(g, vec![0.0, 1.0], CurveKind::Refined).is_err());
    }

    #[test]
    fn empirical_cdf_counts_jumps() {
        let g = Grid::new(vec![0.5f64, 1.0, 2.0, 3.5]).unwrap();
        let c = CdfCurve::empirical(&[2.0, 1.0, 3.0], g).unwrap();
        let want = [0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0];
        for (got, want) in c.values().iter().zip(want) {
            assert!((got - want).abs() < 1e-15);
        }
        assert_eq!(c.kind(), CurveKind::Empirical);
    }

    #[test]
    fn monotonicity_check_with_slack() {
        let g = Grid::linspace(0.0, 1.0, 3).unwrap();
        let c = CdfCurve::new(g.clone(), vec![0.2, 0.2 - 1e-10, 0.9], CurveKind::Refined).unwrap();
        assert!(c.is_nondecreasing(1e-9));
        let c2 = CdfCurve::new(g, vec![0.2, 0.1, 0.9], CurveKind::Refined).unwrap();
        assert!(!c2.is_nondecreasing(1e-9));
    }

    #[test]
    fn sup_distance_requires_matching_grids() {
        let g = Grid::linspace(0.0f64, 1.0, 3).unwrap();
        let a = CdfCurve::new(g.clone(), vec![0.0, 0.4, 1.0], CurveKind::Refined).unwrap();
        let b = CdfCurve::new(g, vec![0.1, 0.5, 1.0], CurveKind::NormalApprox).unwrap();
        assert!((a.sup_distance(&b).unwrap() - 0.1).abs() < 1e-15);
        let other = Grid::linspace(0.0, 2.0, 3).unwrap();
        let c = CdfCurve::new(other, vec![0.0, 0.5, 1.0], CurveKind::Refined).unwrap();
        assert!(a.sup_distance(&c).is_err());
    }

    #[test]
    fn ks_one_sample_hand_computed() {
        let sorted = [0.1, 0.4, 0.8];
        let d = ks_one_sample(&sorted, |x: f64| Ok(x)).unwrap();
        assert!((d - (2.0 / 3.0 - 0.4)).abs() < 1e-15, "got {d}");
    }

    #[test]
    fn ks_two_sample_hand_computed() {
        let a = [1.0f64, 2.0, 3.0];
        let b = [1.5, 2.5];
        let d = ks_two_sample(&a, &b).unwrap();
        assert!((d - 1.0 / 3.0).abs() < 1e-15, "got {d}");
        assert!(ks_two_sample(&a, &[]).is_err());
    }

    #[test]
    fn density_moments_by_trapezoid() {
        // symmetric triangle on [0, 2]: mean 1, variance 1/6
        let g = Grid::linspace(0.0, 2.0, 2001).unwrap();
        let vals: Vec<f64> = g.iter().map(|&z| 1.0 - (z - 1.0f64).abs()).collect();
        let d = DensityCurve::new(g, vals, CurveKind::Density).unwrap();
        assert!((d.mass() - 1.0).abs() < 1e-6);
        assert!((d.mean().unwrap() - 1.0).abs() < 1e-9);
        assert!((d.variance().unwrap() - 1.0 / 6.0).abs() < 1e-6);
    }

    #[test]
    fn density_rejects_negative_values() {
        let g = Grid::linspace(0.0, 1.0, 3).unwrap();
        assert!(DensityCurve::new(g.clone(), vec![0.1, -0.5, 0.1], CurveKind::Density).is_err());
        let ok = DensityCurve::new(g, vec![0.1, -1e-12, 0.1], CurveKind::Density).unwrap();
        assert_eq!(ok.values()[1], 0.0);
    }

    #[test]
    fn crossing_index_finds_the_median_cell() {
        let g = Grid::linspace(0.0, 1.0, 5).unwrap();
        let c = CdfCurve::new(g, vec![0.0, 0.2, 0.6, 0.9, 1.0], CurveKind::Refined).unwrap();
        assert_eq!(c.crossing_index(0.5), Some(2));
        assert_eq!(c.crossing_index(0.95), Some(4));
        assert_eq!(c.crossing_index(2.0), None);
    }
}
