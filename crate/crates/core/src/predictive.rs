//! Predictive CDFs of the kinds produced by the different methods, with a
//! common interface for evaluation, quantiles, intervals and PIT values.

use serde::{Deserialize, Serialize};

use crate::cps::StepwiseCpd;
use crate::error::{Error, Result};
use crate::gn::GnParams;
use crate::special::{norm_cdf, norm_quantile};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Kind {
    SmoothParametric,
    Stepwise,
    Empirical,
    Dirac,
}

/// Central prediction interval; endpoints may be infinite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictionInterval {
    pub lower: f64,
    pub upper: f64,
    pub closed_left: bool,
    pub open_right: bool,
    pub level: f64,
}

impl PredictionInterval {
    pub fn closed(lower: f64, upper: f64, level: f64) -> Self {
        Self { lower, upper, closed_left: true, open_right: false, level }
    }

    pub fn half_open(lower: f64, upper: f64, level: f64) -> Self {
        Self { lower, upper, closed_left: true, open_right: true, level }
    }

    pub fn is_finite(&self) -> bool {
        self.lower.is_finite() && self.upper.is_finite()
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, z: f64) -> bool {
        let above = if self.closed_left { z >= self.lower } else { z > self.lower };
        let below = if self.open_right { z < self.upper } else { z <= self.upper };
        above && below
    }
}

/// Discrete law on sorted distinct atoms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedAtoms {
    atoms: Vec<f64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

impl WeightedAtoms {
    /// Sorts atoms, merges equal values and normalizes the weights.
    pub fn new(atoms: Vec<f64>, weights: Vec<f64>) -> Self {
        let mut pairs: Vec<(f64, f64)> = atoms.into_iter().zip(weights).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (a, w) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == a => last.1 += w,
                _ => merged.push((a, w)),
            }
        }
        let total: f64 = merged.iter().map(|p| p.1).sum();
        let atoms: Vec<f64> = merged.iter().map(|p| p.0).collect();
        let weights: Vec<f64> = merged.iter().map(|p| p.1 / total).collect();
        let mut cumulative = Vec::with_capacity(weights.len());
        let mut acc = 0.0;
        for w in &weights {
            acc += w;
            cumulative.push(acc);
        }
        if let Some(last) = cumulative.last_mut() {
            *last = 1.0;
        }
        Self { atoms, weights, cumulative }
    }

    /// Equal-weight empirical law of a sample.
    pub fn empirical(sample: Vec<f64>) -> Self {
        let n = sample.len();
        Self::new(sample, vec![1.0; n])
    }

    pub fn atoms(&self) -> &[f64] {
        &self.atoms
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn cdf(&self, z: f64) -> f64 {
        let k = self.atoms.partition_point(|&a| a <= z);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    pub fn left_cdf(&self, z: f64) -> f64 {
        let k = self.atoms.partition_point(|&a| a < z);
        if k == 0 {
            0.0
        } else {
            self.cumulative[k - 1]
        }
    }

    pub fn quantile(&self, p: f64) -> f64 {
        let k = self.cumulative.partition_point(|&c| c < p - 1e-12);
        self.atoms[k.min(self.atoms.len() - 1)]
    }

    pub fn mean(&self) -> f64 {
        self.atoms.iter().zip(&self.weights).map(|(a, w)| a * w).sum()
    }

    /// `E|Z − z|`
    pub fn mean_abs_deviation(&self, z: f64) -> f64 {
        self.atoms.iter().zip(&self.weights).map(|(a, w)| w * (a - z).abs()).sum()
    }

    /// `E|Z − Z'|` via the sorted-prefix form of the double sum.
    pub fn mean_abs_difference(&self) -> f64 {
        // Σ_i Σ_j w_i w_j |a_i − a_j| = 2 Σ_i w_i (a_i W_{<i} − S_{<i})
        let mut w_below = 0.0;
        let mut s_below = 0.0;
        let mut acc = 0.0;
        for (a, w) in self.atoms.iter().zip(&self.weights) {
            acc += w * (a * w_below - s_below);
            w_below += w;
            s_below += w * a;
        }
        2.0 * acc
    }
}

/// A predictive distribution for `f(x)` at one location.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Predictive {
    Gaussian { mean: f64, sd: f64 },
    /// `GN(shape, location, scale)`
    GeneralizedNormal { location: f64, scale: f64, shape: f64 },
    Stepwise(StepwiseCpd),
    Empirical(WeightedAtoms),
    Dirac(f64),
}

impl Predictive {
    pub fn kind(&self) -> Kind {
        match self {
            Self::Gaussian { .. } | Self::GeneralizedNormal { .. } => Kind::SmoothParametric,
            Self::Stepwise(_) => Kind::Stepwise,
            Self::Empirical(_) => Kind::Empirical,
            Self::Dirac(_) => Kind::Dirac,
        }
    }

    fn gn(&self) -> Option<(f64, GnParams)> {
        match *self {
            Self::GeneralizedNormal { location, scale, shape } => Some((location, GnParams { shape, scale })),
            _ => None,
        }
    }

    pub fn cdf(&self, z: f64) -> f64 {
        match self {
            Self::Gaussian { mean, sd } => norm_cdf((z - mean) / sd),
            Self::GeneralizedNormal { .. } => {
                let (loc, g) = self.gn().unwrap();
                g.cdf(z - loc)
            }
            Self::Stepwise(f) => f.eval(z),
            Self::Empirical(w) => w.cdf(z),
            Self::Dirac(v) => f64::from(z >= *v),
        }
    }

    /// `F(z⁻)`
    pub fn left_cdf(&self, z: f64) -> f64 {
        match self {
            Self::Stepwise(f) => f.left_limit(z),
            Self::Empirical(w) => w.left_cdf(z),
            Self::Dirac(v) => f64::from(z > *v),
            _ => self.cdf(z),
        }
    }

    /// Generalized inverse `inf{z : F(z) ≥ p}` for `p ∈ (0, 1)`.
    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(p > 0.0 && p < 1.0) {
            return Err(Error::InvalidProbability(p));
        }
        Ok(match self {
            Self::Gaussian { mean, sd } => mean + sd * norm_quantile(p),
            Self::GeneralizedNormal { .. } => {
                let (loc, g) = self.gn().unwrap();
                loc + g.quantile(p)?
            }
            Self::Stepwise(f) => f.quantile_unchecked(p),
            Self::Empirical(w) => w.quantile(p),
            Self::Dirac(v) => *v,
        })
    }

    /// Central `(1 − α)` interval, half-open for the stepwise kind.
    pub fn interval(&self, alpha: f64) -> Result<PredictionInterval> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::InvalidProbability(alpha));
        }
        match self {
            Self::Stepwise(f) => f.interval(alpha),
            _ => {
                let level = 1.0 - alpha;
                match self.gn() {
                    // symmetric law: one inversion
                    Some((loc, g)) => {
                        let half = g.quantile(1.0 - alpha / 2.0)?;
                        Ok(PredictionInterval::closed(loc - half, loc + half, level))
                    }
                    None => Ok(PredictionInterval::closed(
                        self.quantile(alpha / 2.0)?,
                        self.quantile(1.0 - alpha / 2.0)?,
                        level,
                    )),
                }
            }
        }
    }

    /// PIT of `z`. Continuous kinds return `F(z)`; discrete kinds randomize
    /// across the jump, `F(z⁻) + τ (F(z) − F(z⁻))`. The stepwise kind returns
    /// its own randomized rank, which already carries the tie-breaker.
    pub fn pit(&self, z: f64, tau: f64) -> f64 {
        match self {
            Self::Gaussian { .. } | Self::GeneralizedNormal { .. } => self.cdf(z),
            Self::Stepwise(f) => f.eval(z),
            _ => {
                let lo = self.left_cdf(z);
                lo + tau * (self.cdf(z) - lo)
            }
        }
    }

    /// Central point of the law (mean for symmetric kinds).
    pub fn center(&self) -> f64 {
        match self {
            Self::Gaussian { mean, .. } => *mean,
            Self::GeneralizedNormal { location, .. } => *location,
            Self::Stepwise(f) => f.scoring_law().mean(),
            Self::Empirical(w) => w.mean(),
            Self::Dirac(v) => *v,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn atoms_merge_and_normalize() {
        let w = WeightedAtoms::new(vec![2.0, 1.0, 2.0], vec![1.0, 1.0, 2.0]);
        assert_eq!(w.atoms(), &[1.0, 2.0]);
        assert_eq!(w.weights(), &[0.25, 0.75]);
        assert_eq!(w.cdf(1.5), 0.25);
        assert_eq!(w.left_cdf(2.0), 0.25);
        assert_eq!(w.cdf(2.0), 1.0);
        assert_eq!(w.quantile(0.25), 1.0);
        assert_eq!(w.quantile(0.26), 2.0);
    }

    #[test]
    fn double_sum_matches_naive() {
        let a = vec![0.3, -1.0, 2.5, 2.5, 7.0];
        let w = vec![0.1, 0.4, 0.2, 0.1, 0.2];
        let law = WeightedAtoms::new(a.clone(), w.clone());
        let mut naive = 0.0;
        for i in 0..a.len() {
            for j in 0..a.len() {
                naive += w[i] * w[j] * (a[i] - a[j]).abs();
            }
        }
        assert!((law.mean_abs_difference() - naive).abs() < 1e-14);
    }

    #[test]
    fn dirac_pit_is_tau() {
        let d = Predictive::Dirac(3.0);
        assert_eq!(d.pit(3.0, 0.37), 0.37);
        assert_eq!(d.interval(0.2).unwrap(), PredictionInterval::closed(3.0, 3.0, 0.8));
    }

    #[test]
    fn gaussian_interval() {
        let g = Predictive::Gaussian { mean: 1.0, sd: 2.0 };
        let pi = g.interval(0.1).unwrap();
        assert!((pi.width() - 2.0 * 1.6448536269514722 * 2.0).abs() < 1e-10);
    }

    #[test]
    fn interval_membership() {
        let pi = PredictionInterval::half_open(0.0, 1.0, 0.9);
        assert!(pi.contains(0.0) && !pi.contains(1.0));
        assert!(PredictionInterval::closed(0.0, 1.0, 0.9).contains(1.0));
    }
}
