//! The generic surface stays usable at f32, with accuracy scaled to eps.

// Expected values are frozen at the digits the f64 oracle printed.
#![allow(clippy::excessive_precision)]

use mledist::asymptotic::refined_cdf;
use mledist::mle::{solve_mle, Dataset};
use mledist::models::Exponential;
use mledist::moments::MomentMethod;
use mledist::numerics::special::std_normal_cdf;
use mledist::numerics::{Grid, RngStream};
use mledist::wlb::{hypoexp_density, sign_split_prob};

#[test]
fn f32_pipeline_tracks_f64_references() {
    let cdf: f32 = std_normal_cdf(-1.0f32).unwrap();
    assert!((cdf - 0.158_655_25).abs() <= 2e-6);

    let data = Dataset::new(vec![0.5f32, 1.0, 2.5, 0.3, 1.7]).unwrap();
    let hat = solve_mle(&Exponential, &data).unwrap();
    assert!((hat - 1.0 / 1.2).abs() <= 1e-6, "{hat}");

    let grid = Grid::new(vec![0.8f32, 1.0, 1.25]).unwrap();
    let curve = refined_cdf(&Exponential, 1.0f32, 10, &grid, &MomentMethod::Closed).unwrap();
    let want = [0.214_597_65f32, 0.5, 0.736_455_37];
    for (got, want) in curve.values().iter().zip(want) {
        assert!((got - want).abs() <= 1e-5, "{got} vs {want}");
    }

    let dens: f32 = hypoexp_density(&[1.0f32, 2.0], 0.7).unwrap();
    assert!((dens - 0.499_976_68).abs() <= 2e-5, "{dens}");
    let p: f32 = sign_split_prob(&[1.3f32], &[0.7]).unwrap();
    assert!((p - 0.35).abs() <= 2e-6, "{p}");
}

#[test]
fn f32_simulation_is_deterministic() {
    let mut r1 = RngStream::new(5, 5);
    let mut r2 = RngStream::new(5, 5);
    let a: Dataset<f32> = Dataset::simulate(&Exponential, 1.5f32, 32, &mut r1).unwrap();
    let b: Dataset<f32> = Dataset::simulate(&Exponential, 1.5f32, 32, &mut r2).unwrap();
    assert_eq!(a.obs(), b.obs());

    // Draws happen in f64 and narrow, so the f32 stream shadows the f64 one
    // up to the final arithmetic step in the sampler.
    let mut r3 = RngStream::new(5, 5);
    let wide: Dataset<f64> = Dataset::simulate(&Exponential, 1.5f64, 32, &mut r3).unwrap();
    for (&x32, &x64) in a.obs().iter().zip(wide.obs()) {
        let gap = (x32 - x64 as f32).abs();
        assert!(gap <= 4e-7 * (x64 as f32).abs().max(1.0), "{x32} vs {x64}");
    }
}
