//! Gauss–Hermite quadrature for Gaussian expectations.

use std::sync::OnceLock;

use crate::error::{ApmError, Result};

/// Node count used throughout the crate.
pub const DEFAULT_NODES: usize = 64;
/// Smallest node count accepted.
pub const MIN_NODES: usize = 16;

/// Nodes and weights for `∫ e^{-x²} g(x) dx ≈ Σ wᵢ g(xᵢ)`.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussHermite {
    /// Computes the rule by Newton iteration on the orthonormal Hermite
    /// recurrence, using the usual asymptotic initial guesses for the roots.
    pub fn new(n: usize) -> Result<Self> {
        if n < MIN_NODES {
            return Err(ApmError::invalid_arg(format!(
                "Gauss-Hermite rule needs at least {MIN_NODES} nodes, got {n}"
            )));
        }
        // π^{-1/4}
        const PIM4: f64 = 0.751_125_544_464_942_5;
        let nf = n as f64;
        let mut x = vec![0.0; n];
        let mut w = vec![0.0; n];
        let m = n.div_ceil(2);
        let mut z = 0.0_f64;
        for i in 0..m {
            z = match i {
                0 => (2.0 * nf + 1.0).sqrt() - 1.855_75 * (2.0 * nf + 1.0).powf(-0.166_67),
                1 => z - 1.14 * nf.powf(0.426) / z,
                2 => 1.86 * z - 0.86 * x[0],
                3 => 1.91 * z - 0.91 * x[1],
                _ => 2.0 * z - x[i - 2],
            };
            let mut pp = 0.0;
            for _ in 0..100 {
                let mut p1 = PIM4;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
                }
                pp = (2.0 * nf).sqrt() * p2;
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 3e-14 * z.abs().max(1.0) {
                    break;
                }
            }
            x[i] = z;
            x[n - 1 - i] = -z;
            w[i] = 2.0 / (pp * pp);
            w[n - 1 - i] = w[i];
        }
        Ok(GaussHermite { nodes: x, weights: w })
    }

    /// Shared 64-node rule.
    pub fn default_rule() -> &'static GaussHermite {
        static RULE: OnceLock<GaussHermite> = OnceLock::new();
        RULE.get_or_init(|| GaussHermite::new(DEFAULT_NODES).expect("64 >= MIN_NODES"))
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `E[g(L)]` for `L ~ N(mean, sd²)`. With `sd == 0` this is `g(mean)`.
    pub fn expectation<F: Fn(f64) -> f64>(&self, g: F, mean: f64, sd: f64) -> Result<f64> {
        if !(sd >= 0.0) || !sd.is_finite() {
            return Err(ApmError::invalid_arg(format!("standard deviation must be >= 0, got {sd}")));
        }
        if sd == 0.0 {
            let v = g(mean);
            if !v.is_finite() {
                return Err(ApmError::NonFiniteIntegrand { node: 0, point: mean });
            }
            return Ok(v);
        }
        let scale = std::f64::consts::SQRT_2 * sd;
        let mut acc = 0.0;
        for (k, (&xk, &wk)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let point = mean + scale * xk;
            let v = g(point);
            if !v.is_finite() {
                return Err(ApmError::NonFiniteIntegrand { node: k, point });
            }
            acc += wk * v;
        }
        Ok(acc / std::f64::consts::PI.sqrt())
    }
}

/// `E[g(L)]` for `L ~ N(mean, sd²)` with an `nodes`-point Gauss–Hermite rule.
pub fn gauss_quadrature_expectation<F: Fn(f64) -> f64>(
    g: F,
    mean: f64,
    sd: f64,
    nodes: usize,
) -> Result<f64> {
    if nodes == DEFAULT_NODES {
        GaussHermite::default_rule().expectation(g, mean, sd)
    } else {
        GaussHermite::new(nodes)?.expectation(g, mean, sd)
    }
}

/// `E|L − mean| = sd·√(2/π)` for a Gaussian.
pub fn gaussian_mean_abs_deviation(sd: f64) -> f64 {
    sd * (2.0 / std::f64::consts::PI).sqrt()
}
