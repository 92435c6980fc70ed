//! Numerical substrate shared by every other module.

mod linalg;
mod quadrature;
mod rng;

pub use linalg::{cholesky_solve, dominant_eigenvalue, Cholesky, SymMatrix, SYMMETRY_TOL};
pub use quadrature::{
    gauss_quadrature_expectation, gaussian_mean_abs_deviation, GaussHermite, DEFAULT_NODES,
    MIN_NODES,
};
pub use rng::{derive_seed, RngStream};

/// Logistic function `1/(1+e^{-ℓ})`, evaluated without overflow for any finite `ℓ`.
pub fn logistic(l: f64) -> f64 {
    if l >= 0.0 {
        1.0 / (1.0 + (-l).exp())
    } else {
        let e = l.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}
