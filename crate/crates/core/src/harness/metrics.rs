//! Exploration diagnostics and per-iteration aggregation.

use ndarray::ArrayView2;

use crate::data::Dataset;
use crate::error::{ApmError, Result};
use crate::numkit::Cholesky;

/// Value reported for a numerically singular Gram window.
pub const SINGULAR_LOGDET: f64 = f64::NEG_INFINITY;
/// Pivots below this fraction of the largest diagonal entry count as singular.
const GRAM_PIVOT_FLOOR: f64 = 1e-12;

/// Largest distance from an unlabeled pool example to its nearest labeled one.
pub fn maximin_distance(labeled: &[usize], pool: &Dataset) -> Result<f64> {
    if labeled.is_empty() {
        return Err(ApmError::invalid_arg("maximin distance needs at least one labeled example"));
    }
    let mut is_labeled = vec![false; pool.len()];
    for &i in labeled {
        *is_labeled.get_mut(i).ok_or_else(|| ApmError::invalid_arg(format!("index {i} outside pool")))? = true;
    }
    let x = pool.features();
    let mut worst: Option<f64> = None;
    for u in (0..pool.len()).filter(|&u| !is_labeled[u]) {
        let xu = x.row(u);
        let nearest = labeled
            .iter()
            .map(|&v| {
                let diff = &xu - &x.row(v);
                diff.dot(&diff)
            })
            .fold(f64::INFINITY, f64::min);
        worst = Some(worst.map_or(nearest, |w: f64| w.max(nearest)));
    }
    worst
        .map(f64::sqrt)
        .ok_or_else(|| ApmError::invalid_arg("maximin distance needs at least one unlabeled example"))
}

/// `log det(G)` with `G = XXᵀ` for a window of `d` examples in `d` dimensions.
/// Singular windows give [`SINGULAR_LOGDET`].
pub fn gram_logdet_window(selected: ArrayView2<f64>) -> Result<f64> {
    let (k, d) = selected.dim();
    if k != d {
        return Err(ApmError::DimensionMismatch { expected: d, found: k });
    }
    let gram = selected.dot(&selected.t());
    Ok(match Cholesky::factor_with_floor(gram.view(), GRAM_PIVOT_FLOOR) {
        Ok(c) => c.log_det(),
        Err(_) => SINGULAR_LOGDET,
    })
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// `sd/√n` with the sample standard deviation; 0 for a single value.
pub fn std_error(xs: &[f64]) -> f64 {
    let n = xs.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64;
    (var / n as f64).sqrt()
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}
