//! Gaussian approximation of the hyperplane posterior `p(θ | L)` by the
//! quadratic variational bound on the logistic likelihood.
//!
//! With `g(ξ) = tanh(ξ/2)/(4ξ)` (limit `1/8` at `ξ = 0`), each sweep does
//!
//! ```text
//! Σ⁻¹ = λI + 2 Σᵢ g(ξᵢ) xᵢxᵢᵀ
//! μ   = Σ (½ Σᵢ yᵢxᵢ)
//! ξᵢ  = √(xᵢᵀ(Σ + μμᵀ)xᵢ)
//! ```
//!
//! until the largest relative change in `ξ` drops below the tolerance.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::error::{ApmError, Result};
use crate::infotheory::ScalarGaussian;
use crate::labeled::LabeledSet;
use crate::numkit::{Cholesky, SymMatrix};

pub const DEFAULT_VEM_TOL: f64 = 1e-6;
pub const DEFAULT_VEM_MAX_ITER: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    pub mu: Array1<f64>,
    pub sigma: SymMatrix,
    /// One variational parameter per labeled example.
    pub xi: Vec<f64>,
    /// Sweeps performed.
    pub sweeps: usize,
}

/// Serializable summary of a posterior.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PosteriorSummary {
    pub mu: Vec<f64>,
    pub sigma_diag: Vec<f64>,
    pub sweeps: usize,
}

impl GaussianPosterior {
    /// `N(0, I/λ)`.
    pub fn prior(dim: usize, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) {
            return Err(ApmError::invalid_arg(format!("lambda must be positive, got {lambda}")));
        }
        Ok(GaussianPosterior {
            mu: Array1::zeros(dim),
            sigma: SymMatrix::scaled_identity(dim, 1.0 / lambda),
            xi: Vec::new(),
            sweeps: 0,
        })
    }

    /// For tests and callers that hold `(μ, Σ)` from elsewhere. `Σ` must be positive definite.
    pub fn from_moments(mu: Array1<f64>, sigma: SymMatrix) -> Result<Self> {
        if mu.len() != sigma.dim() {
            return Err(ApmError::DimensionMismatch { expected: sigma.dim(), found: mu.len() });
        }
        Cholesky::factor(sigma.view())?;
        Ok(GaussianPosterior { mu, sigma, xi: Vec::new(), sweeps: 0 })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// Distribution of `L = θᵀx`: `N(μᵀx, xᵀΣx)`.
    pub fn channel_input(&self, x: ArrayView1<f64>) -> ScalarGaussian {
        let mean = self.mu.dot(&x);
        let var = self.sigma.quad_form(x).max(0.0);
        ScalarGaussian::new(mean, var).expect("finite posterior moments")
    }

    pub fn summary(&self) -> PosteriorSummary {
        PosteriorSummary {
            mu: self.mu.to_vec(),
            sigma_diag: self.sigma.as_array().diag().to_vec(),
            sweeps: self.sweeps,
        }
    }
}

/// `(μᵀx, xᵀΣx)` as a scalar Gaussian.
pub fn channel_input_distribution(post: &GaussianPosterior, x: ArrayView1<f64>) -> Result<ScalarGaussian> {
    if x.len() != post.dim() {
        return Err(ApmError::DimensionMismatch { expected: post.dim(), found: x.len() });
    }
    Ok(post.channel_input(x))
}

/// `tanh(ξ/2)/(4ξ)`, continuous at 0.
pub fn jj_weight(xi: f64) -> f64 {
    let a = xi.abs();
    if a < 1e-4 {
        // Series: 1/8 − ξ²/96 + ...
        0.125 - a * a / 96.0
    } else {
        (0.5 * a).tanh() / (4.0 * a)
    }
}

struct Moments {
    mu: Array1<f64>,
    sigma: SymMatrix,
}

fn moments_for(set: &LabeledSet, lambda: f64, xi: &[f64], target: &Array1<f64>) -> Result<Moments> {
    let d = set.dim();
    let mut prec = Array2::<f64>::eye(d) * lambda;
    for ((x, _), &z) in set.iter().zip(xi) {
        let w = 2.0 * jj_weight(z);
        for i in 0..d {
            let wxi = w * x[i];
            for j in 0..=i {
                prec[[i, j]] += wxi * x[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            prec[[j, i]] = prec[[i, j]];
        }
    }
    let chol = Cholesky::factor(prec.view())?;
    let mu = chol.solve(target.view());
    Ok(Moments { mu, sigma: chol.inverse() })
}

fn update_xi(set: &LabeledSet, m: &Moments) -> Vec<f64> {
    set.iter()
        .map(|(x, _)| {
            let mx = m.mu.dot(&x);
            (m.sigma.quad_form(x) + mx * mx).max(0.0).sqrt()
        })
        .collect()
}

fn max_rel_change(old: &[f64], new: &[f64]) -> f64 {
    old.iter()
        .zip(new)
        .map(|(&a, &b)| {
            let diff = (b - a).abs();
            if diff == 0.0 {
                0.0
            } else {
                diff / a.abs().max(f64::MIN_POSITIVE)
            }
        })
        .fold(0.0, f64::max)
}

/// Variational posterior for `L` under the prior `N(0, I/λ)`, starting from `ξ = 1`.
pub fn variational_em(set: &LabeledSet, lambda: f64, tol: f64, max_iter: usize) -> Result<GaussianPosterior> {
    if !(tol > 0.0) {
        return Err(ApmError::invalid_arg("tol must be positive"));
    }
    let mut post = GaussianPosterior::prior(set.dim(), lambda)?;
    if set.is_empty() {
        return Ok(post);
    }
    // ½ Σ yᵢxᵢ
    let mut target = Array1::<f64>::zeros(set.dim());
    for (x, y) in set.iter() {
        target.scaled_add(0.5 * y.sign(), &x);
    }

    let mut xi = vec![1.0; set.len()];
    let mut change = f64::INFINITY;
    for sweep in 1..=max_iter {
        let m = moments_for(set, lambda, &xi, &target)?;
        let next = update_xi(set, &m);
        change = max_rel_change(&xi, &next);
        xi = next;
        if change < tol {
            let m = moments_for(set, lambda, &xi, &target)?;
            post.mu = m.mu;
            post.sigma = m.sigma;
            post.xi = xi;
            post.sweeps = sweep;
            return Ok(post);
        }
    }
    Err(ApmError::VariationalNoConvergence { iterations: max_iter, rel_change: change })
}

/// [`variational_em`] with the default tolerance and sweep limit.
pub fn variational_em_default(set: &LabeledSet, lambda: f64) -> Result<GaussianPosterior> {
    variational_em(set, lambda, DEFAULT_VEM_TOL, DEFAULT_VEM_MAX_ITER)
}

/// Largest relative change in `ξ` that one more sweep from `post.xi` would make.
pub fn fixed_point_residual(set: &LabeledSet, lambda: f64, post: &GaussianPosterior) -> Result<f64> {
    let mut target = Array1::<f64>::zeros(set.dim());
    for (x, y) in set.iter() {
        target.scaled_add(0.5 * y.sign(), &x);
    }
    let m = moments_for(set, lambda, &post.xi, &target)?;
    Ok(max_rel_change(&post.xi, &update_xi(set, &m)))
}
