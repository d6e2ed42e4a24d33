//! Jackknife+ intervals built from closed-form leave-one-out GP fits.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gp::FittedGp;
use crate::predictive::PredictionInterval;

/// How the residual radius is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadiusMode {
    /// `|R_{n,−i}| · σ_{n,−i}(x)`
    #[default]
    Standardized,
    /// `|Z_i − m_{n,−i}(X_i)|`
    Raw,
}

/// Leave-one-out ingredients at one test location.
#[derive(Debug, Clone, PartialEq)]
pub struct JackknifeScores {
    pub loo_means: Vec<f64>,
    pub loo_sds: Vec<f64>,
    pub residual_magnitudes: Vec<f64>,
}

/// `m_{n,−i}(x) = m_n(x) − u_i w_i / k̄_i` and
/// `σ²_{n,−i}(x) = σ²_n(x) + u_i² / k̄_i`, with `u = K⁻¹k_*`, `w = K⁻¹(z − m)`.
pub fn jackknife_scores(gp: &FittedGp, x: &[f64]) -> Result<JackknifeScores> {
    let s = gp.solve_point(x)?;
    let n = gp.len();
    let (w, kbar) = (gp.alpha(), gp.diag_inv());
    let mut loo_means = Vec::with_capacity(n);
    let mut loo_sds = Vec::with_capacity(n);
    let mut residual_magnitudes = Vec::with_capacity(n);
    for i in 0..n {
        loo_means.push(s.mean - s.u[i] * w[i] / kbar[i]);
        loo_sds.push((s.var + s.u[i] * s.u[i] / kbar[i]).sqrt());
        residual_magnitudes.push(w[i].abs() / kbar[i].sqrt());
    }
    Ok(JackknifeScores { loo_means, loo_sds, residual_magnitudes })
}

/// `k`-th smallest (1-based) of `values`, `−∞` for `k = 0`, `+∞` past the end.
fn order_stat(values: &mut [f64], k: usize) -> f64 {
    if k == 0 {
        return f64::NEG_INFINITY;
    }
    if k > values.len() {
        return f64::INFINITY;
    }
    values.sort_by(f64::total_cmp);
    values[k - 1]
}

/// Closed interval `[q⁻, q⁺]` with `q⁻` the `⌊α(n+1)⌋`-th smallest lower
/// score and `q⁺` the `⌈(1−α)(n+1)⌉`-th smallest upper score. When `n` is
/// too small for `α` an endpoint is infinite.
pub fn jackknife_plus_interval(gp: &FittedGp, x: &[f64], alpha: f64, mode: RadiusMode) -> Result<PredictionInterval> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidProbability(alpha));
    }
    let s = jackknife_scores(gp, x)?;
    Ok(interval_from_scores(&s, gp.alpha().as_slice(), gp.diag_inv().as_slice(), alpha, mode))
}

pub(crate) fn interval_from_scores(s: &JackknifeScores, w: &[f64], kbar: &[f64], alpha: f64, mode: RadiusMode) -> PredictionInterval {
    let n = s.loo_means.len();
    let radius = |i: usize| match mode {
        RadiusMode::Standardized => s.residual_magnitudes[i] * s.loo_sds[i],
        RadiusMode::Raw => w[i].abs() / kbar[i],
    };
    let mut lower: Vec<f64> = (0..n).map(|i| s.loo_means[i] - radius(i)).collect();
    let mut upper: Vec<f64> = (0..n).map(|i| s.loo_means[i] + radius(i)).collect();
    let np1 = (n + 1) as f64;
    // slack keeps exact products such as 0.1 · 20 on the intended integer
    let k_lo = (alpha * np1 + 1e-9).floor() as usize;
    let k_hi = ((1.0 - alpha) * np1 - 1e-9).ceil() as usize;
    PredictionInterval::closed(order_stat(&mut lower, k_lo), order_stat(&mut upper, k_hi), 1.0 - alpha)
}

/// Intervals at several levels sharing one leave-one-out solve.
pub fn jackknife_plus_intervals(gp: &FittedGp, x: &[f64], levels: &[f64], mode: RadiusMode) -> Result<Vec<PredictionInterval>> {
    let s = jackknife_scores(gp, x)?;
    levels
        .iter()
        .map(|&l| {
            if !(l > 0.0 && l < 1.0) {
                return Err(Error::InvalidProbability(l));
            }
            Ok(interval_from_scores(&s, gp.alpha().as_slice(), gp.diag_inv().as_slice(), 1.0 - l, mode))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(means: Vec<f64>, radii: Vec<f64>) -> JackknifeScores {
        let n = means.len();
        JackknifeScores { loo_means: means, loo_sds: vec![1.0; n], residual_magnitudes: radii }
    }

    #[test]
    fn zero_radius_uses_mean_order_statistics() {
        let s = scores(vec![3.0, 1.0, 2.0, 5.0, 4.0, 0.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0, 13.0, 14.0, 15.0, 16.0, 17.0, 18.0], vec![0.0; 19]);
        let dummy = vec![1.0; 19];
        // n = 19, α = 0.1: ⌊2⌋ = 2nd smallest, ⌈18⌉ = 18th smallest
        let pi = interval_from_scores(&s, &dummy, &dummy, 0.1, RadiusMode::Standardized);
        assert_eq!((pi.lower, pi.upper), (1.0, 17.0));
    }

    #[test]
    fn small_n_gives_infinite_endpoints() {
        let s = scores(vec![0.0, 1.0, 2.0], vec![1.0; 3]);
        let dummy = vec![1.0; 3];
        let pi = interval_from_scores(&s, &dummy, &dummy, 0.1, RadiusMode::Standardized);
        assert_eq!(pi.lower, f64::NEG_INFINITY);
        assert_eq!(pi.upper, f64::INFINITY);
    }

    #[test]
    fn brute_force_order_statistics() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let n = 20;
        let s = JackknifeScores {
            loo_means: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            loo_sds: (0..n).map(|_| rng.gen_range(0.1..1.0)).collect(),
            residual_magnitudes: (0..n).map(|_| rng.gen_range(0.0..2.0)).collect(),
        };
        let dummy = vec![1.0; n];
        for &alpha in &[0.1, 0.2, 0.3] {
            let pi = interval_from_scores(&s, &dummy, &dummy, alpha, RadiusMode::Standardized);
            let mut lo: Vec<f64> = (0..n).map(|i| s.loo_means[i] - s.residual_magnitudes[i] * s.loo_sds[i]).collect();
            let mut hi: Vec<f64> = (0..n).map(|i| s.loo_means[i] + s.residual_magnitudes[i] * s.loo_sds[i]).collect();
            lo.sort_by(f64::total_cmp);
            hi.sort_by(f64::total_cmp);
            // counts: number of lower scores ≤ endpoint is ⌊α(n+1)⌋
            let k_lo = (alpha * 21.0_f64 + 1e-9).floor() as usize;
            let k_hi = ((1.0 - alpha) * 21.0_f64 - 1e-9).ceil() as usize;
            assert_eq!(pi.lower, lo[k_lo - 1]);
            assert_eq!(pi.upper, hi[k_hi - 1]);
        }
    }
}
