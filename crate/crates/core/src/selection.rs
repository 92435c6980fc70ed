//! Example-selection policies.
//!
//! APM-LR picks the candidate whose induced channel-input distribution
//! `N(μᵀx, xᵀΣx)` is closest in `W₂` to the two-point input `B_√P` that
//! achieves capacity under the power constraint `P = B²λ₁(Σ)`. Dropping the
//! terms of `W₂²` that do not depend on `x` leaves
//!
//! ```text
//! (μᵀx)² + (√(xᵀΣx) − √(2P/π))²
//! ```
//!
//! The other policies are the usual baselines plus two ablations that keep
//! only one of the two terms above.

use std::fmt;
use std::str::FromStr;

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{ApmError, Result};
use crate::infotheory::{hb, logistic_cond_entropy};
use crate::logreg::MapModel;
use crate::numkit::{dominant_eigenvalue, logistic, normal_cdf, Cholesky, RngStream};
use crate::posterior::GaussianPosterior;

pub const DEFAULT_INFOGAIN_SAMPLES: usize = 100;
pub const POWER_EIG_TOL: f64 = 1e-8;
pub const POWER_EIG_MAX_ITER: usize = 10_000;

/// Probit slope matching the logistic function at the origin, `√(π/8)`.
pub fn probit_slope() -> f64 {
    (std::f64::consts::PI / 8.0).sqrt()
}

/// `√(π ln 2 / 2)`.
pub fn bald_d() -> f64 {
    (std::f64::consts::PI * std::f64::consts::LN_2 / 2.0).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PolicyKind {
    #[serde(rename = "APM_LR")]
    ApmLr,
    #[serde(rename = "APM_LR_U")]
    ApmLrU,
    #[serde(rename = "APM_LR_V")]
    ApmLrV,
    Uncertainty,
    Random,
    MaxVar,
    InfoGain,
    #[serde(rename = "BALD")]
    Bald,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 8] = [
        PolicyKind::ApmLr,
        PolicyKind::ApmLrU,
        PolicyKind::ApmLrV,
        PolicyKind::Uncertainty,
        PolicyKind::Random,
        PolicyKind::MaxVar,
        PolicyKind::InfoGain,
        PolicyKind::Bald,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PolicyKind::ApmLr => "APM_LR",
            PolicyKind::ApmLrU => "APM_LR_U",
            PolicyKind::ApmLrV => "APM_LR_V",
            PolicyKind::Uncertainty => "Uncertainty",
            PolicyKind::Random => "Random",
            PolicyKind::MaxVar => "MaxVar",
            PolicyKind::InfoGain => "InfoGain",
            PolicyKind::Bald => "BALD",
        }
    }

    /// Key for deriving this policy's random stream; independent of list order.
    pub fn stream_id(self) -> u64 {
        match self {
            PolicyKind::ApmLr => 1,
            PolicyKind::ApmLrU => 2,
            PolicyKind::ApmLrV => 3,
            PolicyKind::Uncertainty => 4,
            PolicyKind::Random => 5,
            PolicyKind::MaxVar => 6,
            PolicyKind::InfoGain => 7,
            PolicyKind::Bald => 8,
        }
    }

    pub fn uses_power_constraint(self) -> bool {
        matches!(self, PolicyKind::ApmLr | PolicyKind::ApmLrV)
    }
}

impl fmt::Display for PolicyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PolicyKind {
    type Err = ApmError;

    /// Case-insensitive; `-` and `_` are interchangeable.
    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase().replace('-', "_");
        PolicyKind::ALL
            .into_iter()
            .find(|k| k.name().to_ascii_lowercase() == key)
            .ok_or_else(|| ApmError::UnknownPolicy(s.to_string()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicySpec {
    pub kind: PolicyKind,
    /// Posterior samples per InfoGain round.
    pub samples: usize,
}

impl PolicySpec {
    pub fn new(kind: PolicyKind) -> Self {
        PolicySpec { kind, samples: DEFAULT_INFOGAIN_SAMPLES }
    }

    pub fn with_samples(kind: PolicyKind, samples: usize) -> Result<Self> {
        if samples == 0 {
            return Err(ApmError::invalid_arg("InfoGain needs at least one sample"));
        }
        Ok(PolicySpec { kind, samples })
    }
}

/// Everything a policy may look at when choosing the next example.
#[derive(Debug, Clone, Copy)]
pub struct SelectionContext<'a> {
    pub pool: &'a Dataset,
    /// Unlabeled pool indices.
    pub available: &'a [usize],
    pub posterior: &'a GaussianPosterior,
    pub map_model: &'a MapModel,
    /// Bound on pool example norms.
    pub bound: f64,
}

/// `P = B²·λ₁(Σ)`.
pub fn power_constraint(post: &GaussianPosterior, bound: f64) -> Result<f64> {
    if !(bound > 0.0) {
        return Err(ApmError::invalid_arg(format!("bound must be positive, got {bound}")));
    }
    let top = dominant_eigenvalue(&post.sigma, POWER_EIG_TOL, POWER_EIG_MAX_ITER)?;
    Ok(bound * bound * top)
}

/// `√(2P/π)`, the standard deviation whose Gaussian best matches `B_√P`.
fn target_sd(power: f64) -> f64 {
    (2.0 * power / std::f64::consts::PI).sqrt()
}

fn apm_from_moments(mean: f64, var: f64, power: f64) -> f64 {
    let dev = var.max(0.0).sqrt() - target_sd(power);
    mean * mean + dev * dev
}

/// APM-LR objective; lower is better.
pub fn apm_score(x: ArrayView1<f64>, post: &GaussianPosterior, power: f64) -> f64 {
    apm_from_moments(post.mu.dot(&x), post.sigma.quad_form(x), power)
}

/// Closed-form approximation of the logistic-channel information for
/// `L ~ N(mean, var)`, via the probit substitution `f(ℓ) ≈ Φ(kℓ)`.
pub fn bald_score(mean: f64, var: f64) -> f64 {
    let k = probit_slope();
    let d = bald_d();
    let kv = k * k * var.max(0.0);
    let first = hb(normal_cdf(k * mean / (kv + 1.0).sqrt()));
    let denom = kv + d * d;
    let second = d * (-(k * k * mean * mean) / (2.0 * denom)).exp() / denom.sqrt();
    first - second
}

/// Distance from `x` to the hyperplane `{z : zᵀθ̂ = 0}`.
pub fn exploit_metric(x: ArrayView1<f64>, theta_hat: ArrayView1<f64>) -> Result<f64> {
    if x.len() != theta_hat.len() {
        return Err(ApmError::DimensionMismatch { expected: theta_hat.len(), found: x.len() });
    }
    let norm = theta_hat.dot(&theta_hat).sqrt();
    if norm == 0.0 {
        return Err(ApmError::invalid_arg("hyperplane normal is zero"));
    }
    Ok(x.dot(&theta_hat).abs() / norm)
}

/// `s` draws from `N(μ, Σ)`, one per row.
pub fn draw_posterior_samples(post: &GaussianPosterior, s: usize, rng: &mut RngStream) -> Result<Array2<f64>> {
    let d = post.dim();
    let chol = Cholesky::factor(post.sigma.view())?;
    let z = Array2::from_shape_fn((s, d), |_| rng.standard_normal());
    let mut out = z.dot(&chol.lower().t());
    for mut row in out.rows_mut() {
        row += &post.mu;
    }
    Ok(out)
}

/// Monte Carlo information gain for each candidate row, sharing one sample batch:
/// `h_b(mean f(θᵢᵀx)) − mean h_b(f(θᵢᵀx))`.
pub fn infogain_scores(candidates: ArrayView2<f64>, samples: ArrayView2<f64>) -> Vec<f64> {
    let s = samples.nrows() as f64;
    let margins = candidates.dot(&samples.t());
    margins
        .rows()
        .into_iter()
        .map(|row| {
            let (mut pf, mut ph) = (0.0, 0.0);
            for &l in row {
                pf += logistic(l);
                ph += logistic_cond_entropy(l);
            }
            hb((pf / s).clamp(0.0, 1.0)) - ph / s
        })
        .collect()
}

#[derive(Clone, Copy)]
enum Goal {
    Min,
    Max,
}

/// Best `(score, index)`; ties go to the lowest pool index, NaN never wins.
fn best_index(available: &[usize], scores: &[f64], goal: Goal) -> usize {
    let mut best: Option<(f64, usize)> = None;
    for (&idx, &s) in available.iter().zip(scores) {
        let key = match goal {
            Goal::Min => s,
            Goal::Max => -s,
        };
        if key.is_nan() {
            continue;
        }
        best = match best {
            None => Some((key, idx)),
            Some((bk, bi)) if key < bk || (key == bk && idx < bi) => Some((key, idx)),
            keep => keep,
        };
    }
    best.map(|(_, i)| i).unwrap_or_else(|| *available.iter().min().expect("non-empty"))
}

/// Per-candidate scores for the deterministic policies, or for InfoGain
/// given a sample batch. Returns `(scores, goal)`.
fn score(ctx: &SelectionContext<'_>, spec: &PolicySpec, rng: &mut RngStream) -> Result<(Vec<f64>, Goal)> {
    let cands = ctx.pool.features().select(Axis(0), ctx.available);
    let post = ctx.posterior;
    let means = || cands.dot(&post.mu);
    let vars = || {
        let cs = cands.dot(post.sigma.as_array());
        (&cs * &cands).sum_axis(Axis(1))
    };
    Ok(match spec.kind {
        PolicyKind::ApmLr => {
            let p = power_constraint(post, ctx.bound)?;
            let (m, v) = (means(), vars());
            (m.iter().zip(&v).map(|(&m, &v)| apm_from_moments(m, v, p)).collect(), Goal::Min)
        }
        PolicyKind::ApmLrU => (means().iter().map(|m| m * m).collect(), Goal::Min),
        PolicyKind::ApmLrV => {
            let p = power_constraint(post, ctx.bound)?;
            (vars().iter().map(|&v| apm_from_moments(0.0, v, p)).collect(), Goal::Min)
        }
        PolicyKind::Uncertainty => {
            let margins = cands.dot(&ctx.map_model.theta);
            (margins.iter().map(|m| m.abs()).collect(), Goal::Min)
        }
        PolicyKind::MaxVar => (vars().to_vec(), Goal::Max),
        PolicyKind::Bald => {
            let (m, v) = (means(), vars());
            (m.iter().zip(&v).map(|(&m, &v)| bald_score(m, v)).collect(), Goal::Max)
        }
        PolicyKind::InfoGain => {
            let samples = draw_posterior_samples(post, spec.samples, rng)?;
            (infogain_scores(cands.view(), samples.view()), Goal::Max)
        }
        PolicyKind::Random => unreachable!("random selection has no scores"),
    })
}

/// Chooses the next pool index to label.
pub fn select(ctx: &SelectionContext<'_>, spec: &PolicySpec, rng: &mut RngStream) -> Result<usize> {
    if ctx.available.is_empty() {
        return Err(ApmError::PoolExhausted { needed: 1, available: 0 });
    }
    if ctx.posterior.dim() != ctx.pool.dim() {
        return Err(ApmError::DimensionMismatch { expected: ctx.pool.dim(), found: ctx.posterior.dim() });
    }
    if spec.kind == PolicyKind::Random {
        return Ok(ctx.available[rng.index(ctx.available.len())]);
    }
    let (scores, goal) = score(ctx, spec, rng)?;
    Ok(best_index(ctx.available, &scores, goal))
}

/// Candidate scores in `ctx.available` order (`None` for Random).
pub fn candidate_scores(ctx: &SelectionContext<'_>, spec: &PolicySpec, rng: &mut RngStream) -> Result<Option<Vec<f64>>> {
    if spec.kind == PolicyKind::Random {
        return Ok(None);
    }
    Ok(Some(score(ctx, spec, rng)?.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::Label;
    use crate::numkit::SymMatrix;
    use ndarray::{array, Array1};

    fn pool(rows: Array2<f64>) -> Dataset {
        // Labels are irrelevant for scoring; alternate them to satisfy the invariant.
        let y = (0..rows.nrows()).map(|i| if i % 2 == 0 { Label::Negative } else { Label::Positive }).collect();
        Dataset::new("t", rows, y).unwrap()
    }

    fn map(theta: Array1<f64>) -> MapModel {
        MapModel { theta, lambda: 0.01, grad_norm: 0.0, iterations: 0 }
    }

    #[test]
    fn names_parse() {
        for k in PolicyKind::ALL {
            assert_eq!(k.name().parse::<PolicyKind>().unwrap(), k);
            assert_eq!(k.name().to_lowercase().parse::<PolicyKind>().unwrap(), k);
        }
        assert_eq!("apm-lr".parse::<PolicyKind>().unwrap(), PolicyKind::ApmLr);
        assert_eq!("bald".parse::<PolicyKind>().unwrap(), PolicyKind::Bald);
        assert!("coreset".parse::<PolicyKind>().is_err());
        assert!(PolicySpec::with_samples(PolicyKind::InfoGain, 0).is_err());
    }

    #[test]
    fn power_examples() {
        let id = GaussianPosterior::from_moments(Array1::zeros(2), SymMatrix::identity(2)).unwrap();
        assert!((power_constraint(&id, 2.0).unwrap() - 4.0).abs() < 1e-12);
        let d = GaussianPosterior::from_moments(Array1::zeros(2), SymMatrix::from_diag(&[3.0, 1.0])).unwrap();
        assert!((power_constraint(&d, 1.0).unwrap() - 3.0).abs() < 3e-8);
        let prior = GaussianPosterior::prior(4, 0.01).unwrap();
        assert!((power_constraint(&prior, 1.0).unwrap() - 100.0).abs() < 1e-9);
        assert!(power_constraint(&prior, 0.0).is_err());
    }

    fn diag_post() -> GaussianPosterior {
        GaussianPosterior::from_moments(array![0.0, 0.0], SymMatrix::from_diag(&[2.0, 1.0])).unwrap()
    }

    #[test]
    fn apm_score_examples() {
        let p = std::f64::consts::PI;
        let post = diag_post();
        assert!(apm_score(array![1.0, 0.0].view(), &post, p).abs() < 1e-15);
        let v = apm_score(array![0.0, 1.0].view(), &post, p);
        assert!((v - (1.0 - 2f64.sqrt()).powi(2)).abs() < 1e-15);
        assert!((v - 0.171_57).abs() < 1e-5);
        let z = apm_score(array![0.0, 0.0].view(), &post, 3.0);
        assert!((z - 2.0 * 3.0 / p).abs() < 1e-15);
    }

    #[test]
    fn apm_even_in_x() {
        let post = GaussianPosterior::from_moments(array![0.4, -1.0], SymMatrix::from_diag(&[2.0, 0.5])).unwrap();
        for x in [array![1.0, 2.0], array![-0.3, 0.1]] {
            let neg = -&x;
            assert_eq!(apm_score(x.view(), &post, 2.0), apm_score(neg.view(), &post, 2.0));
        }
    }

    #[test]
    fn bald_examples() {
        assert!(bald_score(0.0, 0.0).abs() < 1e-15);
        let k = probit_slope();
        let d = bald_d();
        for s2 in [0.1, 1.0, 4.0] {
            let b = bald_score(0.0, s2);
            assert!((b - (1.0 - d / (k * k * s2 + d * d).sqrt())).abs() < 1e-15);
            assert!(b > 0.0);
        }
    }

    #[test]
    fn exploit_examples() {
        assert_eq!(exploit_metric(array![0.0, 5.0].view(), array![2.0, 0.0].view()).unwrap(), 0.0);
        assert_eq!(exploit_metric(array![3.0, 7.0].view(), array![2.0, 0.0].view()).unwrap(), 3.0);
        let a = exploit_metric(array![1.3, -0.2].view(), array![0.7, 0.4].view()).unwrap();
        let b = exploit_metric(array![1.3, -0.2].view(), array![7.0, 4.0].view()).unwrap();
        assert!((a - b).abs() < 1e-15);
        assert!(exploit_metric(array![1.0, 1.0].view(), array![0.0, 0.0].view()).is_err());
    }

    #[test]
    fn uncertainty_picks_smallest_margin() {
        let ds = pool(array![[0.1, 5.0], [2.0, 0.0], [3.0, 3.0], [-2.5, 1.0]]);
        let post = GaussianPosterior::prior(2, 1.0).unwrap();
        let m = map(array![1.0, 0.0]);
        let ctx = SelectionContext { pool: &ds, available: &[0, 1], posterior: &post, map_model: &m, bound: 10.0 };
        let i = select(&ctx, &PolicySpec::new(PolicyKind::Uncertainty), &mut RngStream::new(0)).unwrap();
        assert_eq!(i, 0);
    }

    #[test]
    fn maxvar_and_apm_pick_first_axis() {
        let ds = pool(array![[1.0, 0.0], [0.0, 1.0], [0.0, 1.0], [0.0, 1.0]]);
        let post = diag_post();
        let m = map(array![1.0, 0.0]);
        // B chosen so that B²λ₁(Σ) = π.
        let bound = (std::f64::consts::PI / 2.0).sqrt();
        let ctx = SelectionContext { pool: &ds, available: &[0, 1], posterior: &post, map_model: &m, bound };
        let mut rng = RngStream::new(0);
        assert_eq!(select(&ctx, &PolicySpec::new(PolicyKind::MaxVar), &mut rng).unwrap(), 0);
        assert_eq!(select(&ctx, &PolicySpec::new(PolicyKind::ApmLr), &mut rng).unwrap(), 0);
        let scores = candidate_scores(&ctx, &PolicySpec::new(PolicyKind::ApmLr), &mut rng).unwrap().unwrap();
        assert!(scores[0].abs() < 1e-12);
        assert!((scores[1] - 0.171_572_875).abs() < 1e-8);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let ds = pool(array![[1.0, 0.0], [1.0, 0.0], [1.0, 0.0], [1.0, 0.0]]);
        let post = diag_post();
        let m = map(array![1.0, 1.0]);
        let ctx = SelectionContext { pool: &ds, available: &[3, 1, 2], posterior: &post, map_model: &m, bound: 1.0 };
        let mut rng = RngStream::new(0);
        for kind in [PolicyKind::ApmLr, PolicyKind::ApmLrU, PolicyKind::ApmLrV, PolicyKind::Uncertainty, PolicyKind::MaxVar, PolicyKind::Bald] {
            assert_eq!(select(&ctx, &PolicySpec::new(kind), &mut rng).unwrap(), 1, "{kind}");
        }
    }

    #[test]
    fn infogain_point_mass_posterior() {
        let ds = pool(array![[1.0, 0.0], [0.5, 2.0], [-3.0, 1.0], [0.0, 0.1]]);
        let post = GaussianPosterior::from_moments(array![0.0, 0.0], SymMatrix::scaled_identity(2, 1e-30)).unwrap();
        let m = map(array![1.0, 0.0]);
        let avail = [2, 1, 3, 0];
        let ctx = SelectionContext { pool: &ds, available: &avail, posterior: &post, map_model: &m, bound: 4.0 };
        let spec = PolicySpec::new(PolicyKind::InfoGain);
        let scores = candidate_scores(&ctx, &spec, &mut RngStream::new(1)).unwrap().unwrap();
        assert!(scores.iter().all(|s| s.abs() <= 1e-12));
        assert_eq!(select(&ctx, &spec, &mut RngStream::new(1)).unwrap(), 0);
    }

    #[test]
    fn infogain_scores_reproducible() {
        let post = GaussianPosterior::from_moments(array![0.5, -0.2], SymMatrix::from_diag(&[1.5, 0.7])).unwrap();
        let samples = draw_posterior_samples(&post, 100, &mut RngStream::new(4)).unwrap();
        let cands = array![[1.0, 0.0], [0.2, 0.9], [-1.0, 2.0]];
        let a = infogain_scores(cands.view(), samples.view());
        let b = infogain_scores(cands.view(), samples.view());
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12);
        }
        assert!(a.iter().all(|v| *v >= -1e-12 && *v <= 1.0));
    }

    #[test]
    fn random_draws_from_available() {
        let ds = pool(array![[1.0, 0.0], [0.0, 1.0], [2.0, 0.0], [0.0, 2.0]]);
        let post = diag_post();
        let m = map(array![1.0, 0.0]);
        let ctx = SelectionContext { pool: &ds, available: &[1, 3], posterior: &post, map_model: &m, bound: 3.0 };
        let mut rng = RngStream::new(9);
        for _ in 0..50 {
            let i = select(&ctx, &PolicySpec::new(PolicyKind::Random), &mut rng).unwrap();
            assert!(i == 1 || i == 3);
        }
        let empty = SelectionContext { available: &[], ..ctx };
        assert!(select(&empty, &PolicySpec::new(PolicyKind::Random), &mut rng).is_err());
    }
}
