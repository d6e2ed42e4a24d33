//! Conformal predictive system for GP interpolation.
//!
//! With fixed hyperparameters the gap between the test score and each
//! leave-one-out score of the augmented dataset is affine in the candidate
//! label, `R_{n+1}^z − R_i^z = β_i (z − c_i)` with `β_i > 0`. The conformal
//! CDF is therefore a step function jumping at the sorted thresholds `c_(i)`,
//! with plateau levels `(i + τ)/(n + 1)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::FittedGp;
use crate::predictive::{PredictionInterval, Predictive, WeightedAtoms};

/// Relative tolerance under which two thresholds form a tie block.
pub const TIE_TOL: f64 = 1e-12;
/// Slack, in units of `1/(n+1)`, when comparing a probability to a plateau level.
const LEVEL_SLACK: f64 = 1e-9;

/// Slopes and thresholds of the affine score differences at one test point.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSet {
    pub slopes: Vec<f64>,
    pub thresholds: Vec<f64>,
    pub test_mean: f64,
    pub test_sd: f64,
}

/// Computes `β_i` and `c_i` at `x_star` from the cached factorization.
///
/// With `a = K⁻¹(z − m)`, `u = K⁻¹k_*` and `v = σ_n²(x_star)`:
/// `c_i = m_n + v a_i / (√(v (K⁻¹)_ii + u_i²) + u_i)` and
/// `β_i = (√(v (K⁻¹)_ii + u_i²) + u_i) / (√v · √(v (K⁻¹)_ii + u_i²))`.
pub fn compute_thresholds(gp: &FittedGp, x_star: &[f64]) -> Result<ThresholdSet> {
    if let Some(index) = gp.design_index(x_star) {
        return Err(Error::AtDesignPoint { index });
    }
    let solve = gp.solve_point(x_star)?;
    let v = solve.var;
    if !(v > 0.0) {
        return Err(Error::AtDesignPoint { index: usize::MAX });
    }
    let s = v.sqrt();
    let n = gp.len();
    let mut slopes = Vec::with_capacity(n);
    let mut thresholds = Vec::with_capacity(n);
    for i in 0..n {
        let kbar = gp.diag_inv()[i];
        let u = solve.u[i];
        let a = gp.alpha()[i];
        let root = (v * kbar + u * u).sqrt();
        // root + u without cancellation when u < 0
        let denom = if u >= 0.0 { root + u } else { v * kbar / (root - u) };
        thresholds.push(solve.mean + v * a / denom);
        slopes.push(denom / (s * root));
    }
    Ok(ThresholdSet { slopes, thresholds, test_mean: solve.mean, test_sd: s })
}

impl ThresholdSet {
    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }

    /// Test-point score `R_{n+1}^z`.
    pub fn test_score(&self, z: f64) -> f64 {
        (z - self.test_mean) / self.test_sd
    }

    pub fn cpd(&self, tau: f64) -> StepwiseCpd {
        StepwiseCpd::new(self.thresholds.clone(), tau)
    }
}

/// Stepwise conformal predictive CDF for one test point and one tie-breaker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepwiseCpd {
    sorted: Vec<f64>,
    tau: f64,
}

impl StepwiseCpd {
    /// Sorts the thresholds and snaps near-equal neighbours onto their block's
    /// first value so ties are exact.
    pub fn new(mut thresholds: Vec<f64>, tau: f64) -> Self {
        thresholds.sort_by(f64::total_cmp);
        let mut start = 0;
        for k in 1..thresholds.len() {
            let anchor = thresholds[start];
            if (thresholds[k] - anchor).abs() <= TIE_TOL * (1.0 + anchor.abs()) {
                thresholds[k] = anchor;
            } else {
                start = k;
            }
        }
        Self { sorted: thresholds, tau: tau.clamp(0.0, 1.0) }
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.sorted
    }

    fn denom(&self) -> f64 {
        (self.n() + 1) as f64
    }

    /// `(lower, upper)`: counts of thresholds `< z` and `≤ z`.
    fn counts(&self, z: f64) -> (usize, usize) {
        let lower = self.sorted.partition_point(|&c| c < z);
        let upper = self.sorted.partition_point(|&c| c <= z);
        (lower, upper)
    }

    /// Plateau level on `(c_(i), c_(i+1))`.
    pub fn level(&self, i: usize) -> f64 {
        (i as f64 + self.tau) / self.denom()
    }

    /// Index ranges `(i', i'')`, 1-based and inclusive, of each tie block.
    pub fn tie_blocks(&self) -> Vec<(usize, usize)> {
        let mut blocks = Vec::new();
        let mut k = 0;
        while k < self.sorted.len() {
            let mut j = k;
            while j + 1 < self.sorted.len() && self.sorted[j + 1] == self.sorted[k] {
                j += 1;
            }
            blocks.push((k + 1, j + 1));
            k = j + 1;
        }
        blocks
    }

    /// Randomized rank of the test score: `(i + τ)/(n+1)` between thresholds,
    /// `(i' − 1 + τ(i'' − i' + 2))/(n+1)` on a tie block.
    pub fn eval(&self, z: f64) -> f64 {
        let (lower, upper) = self.counts(z);
        if lower == upper {
            self.level(lower)
        } else {
            (lower as f64 + self.tau * (upper - lower + 1) as f64) / self.denom()
        }
    }

    pub fn left_limit(&self, z: f64) -> f64 {
        self.level(self.counts(z).0)
    }

    pub fn right_limit(&self, z: f64) -> f64 {
        self.level(self.counts(z).1)
    }

    /// Generalized inverse `inf{z : F(z) ≥ p}`: `−∞` when `p ≤ τ/(n+1)`,
    /// `+∞` when `p > (n+τ)/(n+1)`, otherwise a threshold.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability(p));
        }
        Ok(self.quantile_unchecked(p))
    }

    pub(crate) fn quantile_unchecked(&self, p: f64) -> f64 {
        let target = p * self.denom() - self.tau - LEVEL_SLACK;
        if target <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let r = target.ceil() as usize;
        if r > self.n() {
            f64::INFINITY
        } else {
            self.sorted[r.max(1) - 1]
        }
    }

    /// Central half-open interval `[F⁻¹(α/2), F⁻¹(1 − α/2))`.
    pub fn interval(&self, alpha: f64) -> Result<PredictionInterval> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidProbability(alpha));
        }
        Ok(PredictionInterval::half_open(
            self.quantile_unchecked(alpha / 2.0),
            self.quantile_unchecked(1.0 - alpha / 2.0),
            1.0 - alpha,
        ))
    }

    /// Proper discrete law used for scoring: unit atoms of mass `1/(n+1)` at
    /// each threshold, with the tail masses `τ/(n+1)` and `(1−τ)/(n+1)`
    /// clipped onto the extreme thresholds.
    pub fn scoring_law(&self) -> WeightedAtoms {
        let n = self.n();
        let w = 1.0 / self.denom();
        let mut weights = vec![w; n];
        weights[0] += self.tau * w;
        weights[n - 1] += (1.0 - self.tau) * w;
        WeightedAtoms::new(self.sorted.clone(), weights)
    }
}

/// CPS predictive at `x`; a Dirac at the observed value when `x` is a design point.
pub fn cps_predictive(gp: &FittedGp, x: &[f64], tau: f64) -> Result<Predictive> {
    if let Some(i) = gp.design_index(x) {
        return Ok(Predictive::Dirac(gp.dataset().responses()[i]));
    }
    Ok(Predictive::Stepwise(compute_thresholds(gp, x)?.cpd(tau)))
}

/// Randomized conformal PIT of `z` at `x`.
pub fn cps_pit(gp: &FittedGp, x: &[f64], z: f64, tau: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&tau) {
        return Err(Error::InvalidParameter(format!("tau {tau} outside [0, 1]")));
    }
    Ok(compute_thresholds(gp, x)?.cpd(tau).eval(z))
}
