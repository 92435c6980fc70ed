//! The logistic label channel `p(Y = 1 | L) = f(L)` viewed as a binary-output
//! channel: mutual information, capacity under a power constraint, squared
//! 2-Wasserstein distances to the symmetric two-point input, and a numerical
//! check of the information-continuity bound.
//!
//! All information quantities are in bits.

use serde::{Deserialize, Serialize};

use crate::error::{ApmError, Result};
use crate::numkit::{gaussian_mean_abs_deviation, logistic, softplus, GaussHermite, RngStream};

/// Lipschitz constant of the logistic function.
pub const LOGISTIC_LIPSCHITZ: f64 = 0.25;
/// Lipschitz constant used for `h_b(f(ℓ))`.
pub const COND_ENTROPY_LIPSCHITZ: f64 = 0.32;
/// Slack tolerance when checking the continuity bound.
pub const CONTINUITY_TOL: f64 = 1e-9;

/// Two equal point masses at `±t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPointDist {
    t: f64,
}

impl TwoPointDist {
    pub fn new(t: f64) -> Result<Self> {
        if !(t > 0.0) || !t.is_finite() {
            return Err(ApmError::invalid_arg(format!("two-point location must be positive, got {t}")));
        }
        Ok(TwoPointDist { t })
    }

    /// The capacity-achieving input for power `P`, `t = √P`.
    pub fn for_power(power: f64) -> Result<Self> {
        Self::new(power.sqrt())
    }

    pub fn t(&self) -> f64 {
        self.t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalarGaussian {
    mean: f64,
    var: f64,
}

impl ScalarGaussian {
    pub fn new(mean: f64, var: f64) -> Result<Self> {
        if !mean.is_finite() || !var.is_finite() || var < 0.0 {
            return Err(ApmError::invalid_arg(format!("invalid Gaussian (mean {mean}, var {var})")));
        }
        Ok(ScalarGaussian { mean, var })
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn var(&self) -> f64 {
        self.var
    }

    pub fn sd(&self) -> f64 {
        self.var.sqrt()
    }

    /// `E[L²] = μ² + σ²`.
    pub fn second_moment(&self) -> f64 {
        self.mean * self.mean + self.var
    }
}

/// `−p log₂ p − (1−p) log₂(1−p)` with `0·log 0 = 0`.
pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(ApmError::invalid_arg(format!("probability outside [0, 1]: {p}")));
    }
    Ok(hb(p))
}

pub(crate) fn hb(p: f64) -> f64 {
    let term = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.log2() };
    term(p) + term(1.0 - p)
}

/// `h_b(f(ℓ))`, computed from softplus terms so it stays accurate for large `|ℓ|`.
pub fn logistic_cond_entropy(l: f64) -> f64 {
    (logistic(l) * softplus(-l) + logistic(-l) * softplus(l)) / std::f64::consts::LN_2
}

/// Capacity of the logistic channel under `E[L²] ≤ P`: `1 − h_b(f(√P))`.
pub fn capacity_logistic(power: f64) -> f64 {
    if power <= 0.0 {
        return 0.0;
    }
    1.0 - logistic_cond_entropy(power.sqrt())
}

/// `I(p_L, f) = h_b(E[f(L)]) − E[h_b(f(L))]` for Gaussian `L`, by 64-node quadrature.
pub fn mi_gaussian_logistic(g: ScalarGaussian) -> f64 {
    let rule = GaussHermite::default_rule();
    let (m, s) = (g.mean(), g.sd());
    // Both integrands are bounded and finite everywhere.
    let ef = rule.expectation(logistic, m, s).expect("logistic is finite");
    let eh = rule.expectation(logistic_cond_entropy, m, s).expect("h_b∘f is finite");
    (hb(ef) - eh).clamp(0.0, 1.0)
}

/// `W₂²(p_L, B_t) = E[L²] − 2t·E|L − med(L)| + t²`, from the two moments of `p_L`.
pub fn w2sq_to_two_point(second_moment: f64, abs_dev_from_median: f64, target: TwoPointDist) -> f64 {
    let t = target.t();
    second_moment - 2.0 * t * abs_dev_from_median + t * t
}

/// `W₂²(N(μ, σ²), B_t) = μ² + (σ − √(2/π)·t)² + (1 − 2/π)·t²`.
pub fn w2sq_gaussian_to_two_point(g: ScalarGaussian, target: TwoPointDist) -> f64 {
    let t = target.t();
    let c = (2.0 / std::f64::consts::PI).sqrt();
    let dev = g.sd() - c * t;
    g.mean() * g.mean() + dev * dev + (1.0 - 2.0 / std::f64::consts::PI) * t * t
}

/// Same quantity via the moment form, using `E|L − μ| = σ√(2/π)`.
pub fn w2sq_gaussian_via_moments(g: ScalarGaussian, target: TwoPointDist) -> f64 {
    w2sq_to_two_point(g.second_moment(), gaussian_mean_abs_deviation(g.sd()), target)
}

/// `K_P = K₁·log₂(f(√P)/(1 − f(√P))) + K₂`. The log-odds of the logistic
/// function at `√P` is `√P` itself, so this is `K₁·√P·log₂e + K₂`.
pub fn continuity_constant(power: f64) -> f64 {
    LOGISTIC_LIPSCHITZ * power.sqrt() * std::f64::consts::LOG2_E + COND_ENTROPY_LIPSCHITZ
}

/// Slack of `C − I(p_L, f) ≤ K_P·W₂(p_L, B_√P)` for one Gaussian input;
/// negative slack means the bound is violated.
pub fn continuity_slack(power: f64, g: ScalarGaussian) -> Result<f64> {
    let target = TwoPointDist::for_power(power)?;
    let gap = capacity_logistic(power) - mi_gaussian_logistic(g);
    let w2 = w2sq_gaussian_to_two_point(g, target).max(0.0).sqrt();
    Ok(continuity_constant(power) * w2 - gap)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContinuityReport {
    pub power: f64,
    pub k_p: f64,
    pub capacity: f64,
    pub trials: usize,
    pub violations: usize,
    pub max_slack: f64,
    pub min_slack: f64,
}

/// Draws `trials` Gaussians uniformly over the power disc `μ² + σ² ≤ P`
/// (in `(μ, σ)`, `σ > 0`) and checks the continuity bound for each.
pub fn verify_info_continuity(power: f64, trials: usize, rng: &mut RngStream) -> Result<ContinuityReport> {
    if !(power > 0.0) {
        return Err(ApmError::invalid_arg(format!("power must be positive, got {power}")));
    }
    if trials == 0 {
        return Err(ApmError::invalid_arg("trials must be at least 1"));
    }
    let mut violations = 0;
    let mut max_slack = f64::NEG_INFINITY;
    let mut min_slack = f64::INFINITY;
    for _ in 0..trials {
        // 1 − U lies in (0, 1], so r > 0.
        let r = (power * (1.0 - rng.uniform())).sqrt();
        let phi = rng.uniform_in(-0.5, 0.5) * std::f64::consts::PI;
        let g = ScalarGaussian::new(r * phi.sin(), (r * phi.cos()).powi(2))?;
        let slack = continuity_slack(power, g)?;
        if slack < -CONTINUITY_TOL {
            violations += 1;
        }
        max_slack = max_slack.max(slack);
        min_slack = min_slack.min(slack);
    }
    Ok(ContinuityReport {
        power,
        k_p: continuity_constant(power),
        capacity: capacity_logistic(power),
        trials,
        violations,
        max_slack,
        min_slack,
    })
}

/// A distribution on finitely many points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteDist {
    support: Vec<f64>,
    weights: Vec<f64>,
}

impl DiscreteDist {
    /// Weights must be non-negative and sum to 1 within `1e-9`.
    pub fn new(support: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        if support.len() != weights.len() {
            return Err(ApmError::DimensionMismatch { expected: support.len(), found: weights.len() });
        }
        if support.is_empty() {
            return Err(ApmError::invalid_arg("empty support"));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) || support.iter().any(|s| !s.is_finite()) {
            return Err(ApmError::invalid_arg("weights must be non-negative and support finite"));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(ApmError::invalid_arg(format!("weights sum to {total}, expected 1")));
        }
        Ok(DiscreteDist { support, weights })
    }

    pub fn point_mass(at: f64) -> Self {
        DiscreteDist { support: vec![at], weights: vec![1.0] }
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `½p(ℓ) + ½p(−ℓ)`.
    pub fn symmetrized(&self) -> DiscreteDist {
        let support = self.support.iter().flat_map(|&s| [s, -s]).collect();
        let weights = self.weights.iter().flat_map(|&w| [0.5 * w, 0.5 * w]).collect();
        DiscreteDist { support, weights }
    }

    pub fn mi_logistic(&self) -> f64 {
        let pairs = self.support.iter().zip(&self.weights);
        let ef: f64 = pairs.clone().map(|(&l, &w)| w * logistic(l)).sum();
        let eh: f64 = pairs.map(|(&l, &w)| w * logistic_cond_entropy(l)).sum();
        hb(ef.clamp(0.0, 1.0)) - eh
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetrizationCheck {
    pub mi: f64,
    pub mi_symmetrized: f64,
}

impl SymmetrizationCheck {
    pub fn holds(&self) -> bool {
        self.mi_symmetrized >= self.mi - 1e-12
    }
}

/// Mutual information through the logistic channel of `p` and of its
/// symmetrization, both by exact discrete summation.
pub fn mi_symmetrization_check(p: &DiscreteDist) -> SymmetrizationCheck {
    SymmetrizationCheck { mi: p.mi_logistic(), mi_symmetrized: p.symmetrized().mi_logistic() }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(m: f64, v: f64) -> ScalarGaussian {
        ScalarGaussian::new(m, v).unwrap()
    }

    fn tp(t: f64) -> TwoPointDist {
        TwoPointDist::new(t).unwrap()
    }

    #[test]
    fn entropy_examples() {
        assert_eq!(binary_entropy(0.5).unwrap(), 1.0);
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        // 30-digit evaluation gives 0.5270655659997284.
        let v = binary_entropy(0.880797).unwrap();
        assert!((v - 0.527_065_565_999_728_4).abs() < 1e-14, "{v}");
        assert!((v - 0.527_08).abs() < 1e-4);
        assert!(binary_entropy(1.1).is_err());
        assert!(binary_entropy(-0.1).is_err());
    }

    #[test]
    fn cond_entropy_matches_direct() {
        for l in [-30.0, -5.0, -1.0, 0.0, 0.3, 2.0, 12.0] {
            let direct = hb(logistic(l));
            assert!((logistic_cond_entropy(l) - direct).abs() < 1e-12, "l={l}");
        }
        assert!(logistic_cond_entropy(800.0).abs() < 1e-300);
    }

    #[test]
    fn capacity_examples() {
        assert!(capacity_logistic(1e-12) < 1e-12);
        assert_eq!(capacity_logistic(0.0), 0.0);
        assert!((capacity_logistic(4.0) - 0.472_92).abs() < 1e-3);
        assert!((capacity_logistic(4.0) - 0.472_934_658_996_838_4).abs() < 1e-14);
        assert!(capacity_logistic(9.0) > capacity_logistic(4.0));
    }

    #[test]
    fn mi_examples() {
        assert_eq!(mi_gaussian_logistic(g(1.3, 0.0)), 0.0);
        assert!(mi_gaussian_logistic(g(0.0, 100.0)) > mi_gaussian_logistic(g(0.0, 1.0)));
        let v = mi_gaussian_logistic(g(0.0, 4.0));
        assert!(v > 0.0 && v < capacity_logistic(4.0));
    }

    #[test]
    fn w2_examples() {
        // B_t against itself, median 0.
        assert!(w2sq_to_two_point(4.0, 2.0, tp(2.0)).abs() < 1e-15);
        // δ₁ against B₁: ½·0² + ½·2² = 2.
        assert!((w2sq_to_two_point(1.0, 0.0, tp(1.0)) - 2.0).abs() < 1e-15);
        let v = w2sq_gaussian_to_two_point(g(0.0, 1.0), tp(1.0));
        assert!((v - (2.0 - 2.0 * (2.0 / std::f64::consts::PI).sqrt())).abs() < 1e-14);
        assert!((v - 0.404_23).abs() < 1e-5);
        assert!((w2sq_gaussian_to_two_point(g(1.0, 1.0), tp(1.0)) - 1.404_23).abs() < 1e-5);
    }

    #[test]
    fn w2_matched_sd() {
        let t = 1.7;
        let sd = (2.0 / std::f64::consts::PI).sqrt() * t;
        let v = w2sq_gaussian_to_two_point(g(0.0, sd * sd), tp(t));
        assert!((v - (1.0 - 2.0 / std::f64::consts::PI) * t * t).abs() < 1e-14);
    }

    #[test]
    fn k_p_value() {
        let k = continuity_constant(4.0);
        let direct = 0.25 * (logistic(2.0) / (1.0 - logistic(2.0))).log2() + 0.32;
        assert!((k - direct).abs() < 1e-14);
        assert!((k - 1.0414).abs() < 1e-4);
    }

    #[test]
    fn continuity_boundary_gaussian() {
        for p in [0.5, 1.0, 4.0, 9.0] {
            let s = continuity_slack(p, g(0.0, p)).unwrap();
            assert!(s > 0.0, "P={p} slack={s}");
        }
    }

    #[test]
    fn symmetrization_point_mass() {
        let r = mi_symmetrization_check(&DiscreteDist::point_mass(3.0));
        assert!(r.mi.abs() < 1e-15);
        assert!((r.mi_symmetrized - (1.0 - hb(logistic(3.0)))).abs() < 1e-14);
        assert!(r.mi_symmetrized > 0.0);
    }

    #[test]
    fn symmetrization_symmetric_input() {
        let p = DiscreteDist::new(vec![-1.0, 1.0, 0.0], vec![0.3, 0.3, 0.4]).unwrap();
        let r = mi_symmetrization_check(&p);
        assert!((r.mi - r.mi_symmetrized).abs() < 1e-14);
    }

    #[test]
    fn discrete_weights_validated() {
        assert!(DiscreteDist::new(vec![0.0, 1.0], vec![0.5, 0.4]).is_err());
        assert!(DiscreteDist::new(vec![0.0, 1.0], vec![1.5, -0.5]).is_err());
        assert!(DiscreteDist::new(vec![0.0, 1.0], vec![0.5, 0.5 + 1e-12]).is_ok());
    }

    #[test]
    fn invalid_inputs() {
        assert!(TwoPointDist::new(0.0).is_err());
        assert!(ScalarGaussian::new(0.0, -1.0).is_err());
        assert!(verify_info_continuity(0.0, 10, &mut RngStream::new(0)).is_err());
        assert!(verify_info_continuity(1.0, 0, &mut RngStream::new(0)).is_err());
    }
}
