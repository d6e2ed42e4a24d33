//! Maximum-likelihood hyperparameter selection.
//!
//! The constant mean and the variance are profiled out in closed form
//! (generalized least squares mean, `σ̂² = rᵀR⁻¹r / n`), leaving a
//! likelihood over log-lengthscales that is minimized by Nelder–Mead from
//! a seeded Latin-hypercube set of starts.

use nalgebra::DVector;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::model::factorize;
use super::{Dataset, KernelParams};
use crate::error::{Error, Result};
use crate::optim::{nelder_mead, NelderMeadOptions};

pub const ML_RESTARTS: usize = 8;
/// Start region, as multiples of the domain range per axis.
pub const START_RANGE: (f64, f64) = (0.05, 2.0);
/// Hard search box, as multiples of the domain range per axis.
pub const SEARCH_BOX: (f64, f64) = (1e-3, 1e2);
pub const VARIANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct MlFit {
    pub params: KernelParams,
    /// Profiled negative log-likelihood, up to an additive constant.
    pub neg_log_likelihood: f64,
    /// False when no restart met the simplex tolerance; `params` is then the
    /// best point evaluated.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct Profile {
    pub mean: f64,
    pub variance: f64,
    pub neg_log_likelihood: f64,
}

fn variance_floor(z: &[f64]) -> f64 {
    let n = z.len() as f64;
    let mean = z.iter().sum::<f64>() / n;
    let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    if var > 0.0 {
        VARIANCE_FLOOR * var
    } else {
        VARIANCE_FLOOR * mean.powi(2).max(1.0)
    }
}

/// Profiled likelihood at fixed lengthscales.
pub fn profile_likelihood(dataset: &Dataset, lengthscales: &[f64], regularity: u32) -> Result<Profile> {
    let corr = KernelParams::new(0.0, 1.0, lengthscales.to_vec(), regularity)?;
    let (chol, _) = factorize(dataset.points(), &corr)?;
    let n = dataset.len();
    let z = DVector::from_column_slice(dataset.responses());
    let ones = DVector::from_element(n, 1.0);
    let r1 = chol.solve(&ones);
    let rz = chol.solve(&z);
    let mean = rz.sum() / r1.sum();
    let resid = z.map(|v| v - mean);
    let quad = resid.dot(&chol.solve(&resid));
    let variance = (quad / n as f64).max(variance_floor(dataset.responses()));
    let log_det: f64 = chol.l_dirty().diagonal().iter().map(|l| l.ln()).sum();
    Ok(Profile { mean, variance, neg_log_likelihood: 0.5 * n as f64 * variance.ln() + log_det })
}

/// Kernel parameters with mean and variance profiled at the given lengthscales.
pub fn profiled_params(dataset: &Dataset, lengthscales: &[f64], regularity: u32) -> Result<KernelParams> {
    let p = profile_likelihood(dataset, lengthscales, regularity)?;
    KernelParams::new(p.mean, p.variance, lengthscales.to_vec(), regularity)
}

fn latin_hypercube(rng: &mut ChaCha8Rng, count: usize, lo: &[f64], hi: &[f64]) -> Vec<Vec<f64>> {
    let d = lo.len();
    let mut pts = vec![vec![0.0; d]; count];
    for j in 0..d {
        let mut cells: Vec<usize> = (0..count).collect();
        cells.shuffle(rng);
        for (i, &c) in cells.iter().enumerate() {
            let t = (c as f64 + rng.gen::<f64>()) / count as f64;
            pts[i][j] = lo[j] + t * (hi[j] - lo[j]);
        }
    }
    pts
}

/// Fits `(m, σ², ρ)` by maximum likelihood. Deterministic given `seed`.
pub fn fit_ml(dataset: &Dataset, regularity: u32, seed: u64) -> Result<MlFit> {
    let ranges = dataset.ranges();
    let d = ranges.len();
    let start_lo: Vec<f64> = ranges.iter().map(|r| (START_RANGE.0 * r).ln()).collect();
    let start_hi: Vec<f64> = ranges.iter().map(|r| (START_RANGE.1 * r).ln()).collect();
    let box_lo: Vec<f64> = ranges.iter().map(|r| (SEARCH_BOX.0 * r).ln()).collect();
    let box_hi: Vec<f64> = ranges.iter().map(|r| (SEARCH_BOX.1 * r).ln()).collect();

    let objective = |log_rho: &[f64]| -> f64 {
        if log_rho.iter().zip(box_lo.iter().zip(&box_hi)).any(|(x, (lo, hi))| x < lo || x > hi) {
            return f64::INFINITY;
        }
        let rho: Vec<f64> = log_rho.iter().map(|v| v.exp()).collect();
        profile_likelihood(dataset, &rho, regularity).map_or(f64::INFINITY, |p| p.neg_log_likelihood)
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let starts = latin_hypercube(&mut rng, ML_RESTARTS, &start_lo, &start_hi);
    let opts = NelderMeadOptions { initial_step: 0.5, max_evals: 300 + 150 * d, f_tol: 1e-9, x_tol: 1e-6 };

    let mut best: Option<(Vec<f64>, f64)> = None;
    let mut any_converged = false;
    for start in &starts {
        let m = nelder_mead(objective, start, opts);
        any_converged |= m.converged;
        if m.value.is_finite() && best.as_ref().is_none_or(|(_, v)| m.value < *v) {
            best = Some((m.x, m.value));
        }
    }
    let (log_rho, value) = best.ok_or(Error::SingularGram { condition: f64::INFINITY })?;
    if !any_converged {
        log::warn!("maximum likelihood did not converge in {ML_RESTARTS} restarts");
    }
    let rho: Vec<f64> = log_rho.iter().map(|v| v.exp()).collect();
    let params = profiled_params(dataset, &rho, regularity)?;
    Ok(MlFit { params, neg_log_likelihood: value, converged: any_converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gp::model::gram;
    use nalgebra::DMatrix;
    use rand_distr::{Distribution, StandardNormal};

    fn sample_prior(n: usize, width: f64, rho: f64, p: u32, seed: u64) -> Dataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs: Vec<f64> = (0..n).map(|_| width * rng.gen::<f64>()).collect();
        xs.sort_by(f64::total_cmp);
        let points: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let params = KernelParams::new(0.0, 1.0, vec![rho], p).unwrap();
        let k: DMatrix<f64> = gram(&points, &params, 1e-8);
        let l = k.cholesky().unwrap().l();
        let eps = DVector::from_iterator(n, (0..n).map(|_| StandardNormal.sample(&mut rng)));
        let z = l * eps;
        Dataset::new(points, z.iter().copied().collect(), vec![(0.0, width)]).unwrap()
    }

    // Under infill on a short interval only σ²/ρ^{2ν} is identifiable, so the
    // design spans about 33 lengthscales.
    #[test]
    fn recovers_lengthscale_of_prior_samples() {
        let runs = 20;
        let mut hits = 0;
        for seed in 0..runs {
            let ds = sample_prior(200, 10.0, 0.3, 1, 1000 + seed);
            let fit = fit_ml(&ds, 1, seed).unwrap();
            let rho = fit.params.lengthscales[0];
            if rho > 0.3 / 1.5 && rho < 0.3 * 1.5 {
                hits += 1;
            }
        }
        assert!(hits as f64 >= 0.9 * runs as f64, "{hits}/{runs}");
    }

    #[test]
    fn deterministic_given_seed() {
        let ds = sample_prior(30, 1.0, 0.2, 2, 7);
        assert_eq!(fit_ml(&ds, 2, 3).unwrap(), fit_ml(&ds, 2, 3).unwrap());
    }

    #[test]
    fn constant_responses() {
        let points: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64 / 7.0, (i * 3 % 8) as f64 / 7.0]).collect();
        let ds = Dataset::new(points, vec![4.2; 8], vec![(0.0, 1.0); 2]).unwrap();
        let fit = fit_ml(&ds, 2, 1).unwrap();
        assert!((fit.params.mean - 4.2).abs() < 1e-9 * 4.2, "{}", fit.params.mean);
        let floor = VARIANCE_FLOOR * 4.2f64.powi(2);
        assert!(fit.params.variance >= floor && fit.params.variance < floor * 1.0001);
    }
}
