//! Homogeneous binary logistic regression: MAP fitting and evaluation.
//!
//! The objective is `λ/2·‖θ‖² + Σ ln(1 + exp(−y·xᵀθ))`, i.e. the negative log
//! posterior under the prior `θ ~ N(0, I/λ)`. It is strictly convex, so the
//! solver is plain Newton with Armijo backtracking from `θ = 0`.

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Label};
use crate::error::{ApmError, Result};
use crate::labeled::LabeledSet;
use crate::numkit::{logistic, softplus, Cholesky};

pub const DEFAULT_LAMBDA: f64 = 0.01;
pub const GRAD_TOL: f64 = 1e-6;
pub const MAX_NEWTON_ITER: usize = 100;
const ARMIJO_C: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapModel {
    pub theta: Array1<f64>,
    pub lambda: f64,
    /// Gradient 2-norm at `theta`.
    pub grad_norm: f64,
    pub iterations: usize,
}

/// `p(Y = +1 | x, θ) = f(xᵀθ)`.
pub fn predict_proba(theta: ArrayView1<f64>, x: ArrayView1<f64>) -> f64 {
    logistic(x.dot(&theta))
}

pub fn objective(theta: ArrayView1<f64>, set: &LabeledSet, lambda: f64) -> f64 {
    let reg = 0.5 * lambda * theta.dot(&theta);
    reg + set.iter().map(|(x, y)| softplus(-y.sign() * x.dot(&theta))).sum::<f64>()
}

/// `λθ − Σ y·x·f(−y·xᵀθ)`.
pub fn gradient(theta: ArrayView1<f64>, set: &LabeledSet, lambda: f64) -> Array1<f64> {
    let mut g = theta.to_owned() * lambda;
    for (x, y) in set.iter() {
        let s = y.sign();
        let w = logistic(-s * x.dot(&theta));
        g.scaled_add(-s * w, &x);
    }
    g
}

fn hessian(theta: ArrayView1<f64>, set: &LabeledSet, lambda: f64) -> Array2<f64> {
    let d = set.dim();
    let mut h = Array2::eye(d) * lambda;
    for (x, _) in set.iter() {
        let p = logistic(x.dot(&theta));
        let w = p * (1.0 - p);
        for i in 0..d {
            let wxi = w * x[i];
            for j in 0..=i {
                h[[i, j]] += wxi * x[j];
            }
        }
    }
    for i in 0..d {
        for j in 0..i {
            h[[j, i]] = h[[i, j]];
        }
    }
    h
}

/// MAP estimate by damped Newton. An empty set returns `θ = 0`.
pub fn fit_map(set: &LabeledSet, lambda: f64) -> Result<MapModel> {
    newton(set, lambda, &mut Vec::new())
}

/// [`fit_map`], also returning the objective at every Newton iterate (starting at `θ = 0`).
pub fn fit_map_with_trace(set: &LabeledSet, lambda: f64) -> Result<(MapModel, Vec<f64>)> {
    let mut trace = Vec::new();
    let m = newton(set, lambda, &mut trace)?;
    Ok((m, trace))
}

fn newton(set: &LabeledSet, lambda: f64, trace: &mut Vec<f64>) -> Result<MapModel> {
    if !(lambda > 0.0) {
        return Err(ApmError::invalid_arg(format!("lambda must be positive, got {lambda}")));
    }
    let d = set.dim();
    let mut theta = Array1::<f64>::zeros(d);
    let mut f = objective(theta.view(), set, lambda);
    let mut g = gradient(theta.view(), set, lambda);
    let mut gnorm = g.dot(&g).sqrt();
    trace.push(f);

    for iter in 0..MAX_NEWTON_ITER {
        if gnorm <= GRAD_TOL {
            return Ok(MapModel { theta, lambda, grad_norm: gnorm, iterations: iter });
        }
        let h = hessian(theta.view(), set, lambda);
        let step = -Cholesky::factor(h.view())?.solve(g.view());
        let slope = g.dot(&step);

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let cand = &theta + &(&step * t);
            let fc = objective(cand.view(), set, lambda);
            if fc <= f + ARMIJO_C * t * slope {
                accepted = Some((cand, fc));
                break;
            }
            t *= BACKTRACK;
        }
        let Some((cand, fc)) = accepted else {
            // No representable decrease along the Newton direction.
            return Err(ApmError::MapNoConvergence { iterations: iter, grad_norm: gnorm });
        };
        theta = cand;
        f = fc;
        trace.push(f);
        g = gradient(theta.view(), set, lambda);
        gnorm = g.dot(&g).sqrt();
    }
    if gnorm <= GRAD_TOL {
        return Ok(MapModel { theta, lambda, grad_norm: gnorm, iterations: MAX_NEWTON_ITER });
    }
    Err(ApmError::MapNoConvergence { iterations: MAX_NEWTON_ITER, grad_norm: gnorm })
}

/// Fraction of rows with `sign(xᵀθ) = y`, where `sign(0) = +1`.
pub fn accuracy(theta: ArrayView1<f64>, ds: &Dataset) -> Result<f64> {
    if theta.len() != ds.dim() {
        return Err(ApmError::DimensionMismatch { expected: ds.dim(), found: theta.len() });
    }
    if ds.is_empty() {
        return Err(ApmError::invalid_data("accuracy of an empty dataset"));
    }
    let margins = ds.features().dot(&theta);
    let correct = margins.iter().zip(ds.labels()).filter(|(m, y)| Label::from_sign(**m) == **y).count();
    Ok(correct as f64 / ds.len() as f64)
}
