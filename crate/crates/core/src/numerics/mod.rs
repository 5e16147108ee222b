//! Numerical kernels: special functions, quadrature, root finding, finite
//! differences, seeded RNG streams, and evaluation grids.

pub mod fdiff;
pub mod grid;
pub mod quad;
pub mod rng;
pub mod roots;
pub mod special;

pub use fdiff::{finite_diff, DiffOrder};
pub use grid::Grid;
pub use quad::{integrate_1d, integrate_1d_tol, Quadrature};
pub use rng::{derive_seed, RngStream};
pub use roots::{find_root_monotone, find_root_monotone_cfg, RootCfg};
pub use special::{
    inv_mills, ln_gamma, ln_std_normal_cdf, regularized_gamma_lower, regularized_gamma_pair,
    std_normal_cdf, std_normal_pdf,
};
