//! Bayesian-calibrated residuals: a generalized normal law for the
//! standardized leave-one-out residuals, an MCMC posterior over its
//! `(β, λ)`, two rules for picking one draw, and the resulting smooth
//! predictive `F(z) = G_{β*,λ*}((z − m_n(x)) / σ_n(x))`.

use rand::seq::index::sample as sample_indices;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gn::{kolmogorov_between, GnLaw, GnParams};
use crate::gp::{FittedGp, Posterior};
use crate::predictive::Predictive;

/// Prior upper bounds `(a, b)` for `β ~ U(0, a)`, `λ ~ U(0, b)`.
pub const DEFAULT_BOUNDS: (f64, f64) = (10.0, 10.0);
pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_DRAWS: usize = 3000;
/// Rule 2 compares each candidate with at most this many other draws.
pub const RULE2_SUBSAMPLE: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McmcOptions {
    pub burn_in: usize,
    pub draws: usize,
    pub thin: usize,
    pub target_acceptance: f64,
    /// Initial random-walk step on `(ln β, ln λ)`.
    pub initial_step: f64,
}

impl Default for McmcOptions {
    fn default() -> Self {
        Self { burn_in: 2000, draws: DEFAULT_DRAWS, thin: 5, target_acceptance: 0.3, initial_step: 0.3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnPosterior {
    pub draws: Vec<GnParams>,
    pub bounds: (f64, f64),
    /// Acceptance rate after burn-in.
    pub acceptance_rate: f64,
    pub seed: u64,
}

/// Posterior log density on `(ln β, ln λ)`, including the Jacobian `βλ`.
struct LogTarget<'a> {
    abs_residuals: &'a [f64],
    bounds: (f64, f64),
}

impl LogTarget<'_> {
    fn eval(&self, log_beta: f64, log_lambda: f64) -> f64 {
        let (beta, lambda) = (log_beta.exp(), log_lambda.exp());
        if !(beta < self.bounds.0 && lambda < self.bounds.1) || beta <= 0.0 || lambda <= 0.0 {
            return f64::NEG_INFINITY;
        }
        let g = GnParams { shape: beta, scale: lambda };
        let n = self.abs_residuals.len() as f64;
        let mut tail = 0.0;
        for &r in self.abs_residuals {
            tail += (r / lambda).powf(beta);
        }
        let ll = n * g.log_norm() - tail;
        if ll.is_nan() {
            f64::NEG_INFINITY
        } else {
            ll + log_beta + log_lambda
        }
    }
}

pub fn posterior_sample(residuals: &[f64], bounds: (f64, f64), draws: usize, seed: u64) -> Result<GnPosterior> {
    posterior_sample_with(residuals, bounds, McmcOptions { draws, ..McmcOptions::default() }, seed)
}

/// Adaptive random-walk Metropolis on `(ln β, ln λ)`. The step size is
/// tuned towards the target acceptance during burn-in only, then frozen.
pub fn posterior_sample_with(residuals: &[f64], bounds: (f64, f64), opts: McmcOptions, seed: u64) -> Result<GnPosterior> {
    if residuals.len() < 5 {
        return Err(Error::DegenerateResiduals(format!("need at least 5 residuals, got {}", residuals.len())));
    }
    if !(bounds.0 > 0.0 && bounds.1 > 0.0) {
        return Err(Error::InvalidParameter(format!("prior bounds {bounds:?}")));
    }
    if residuals.iter().any(|r| !r.is_finite()) {
        return Err(Error::DegenerateResiduals("non-finite residual".into()));
    }
    if residuals.iter().all(|&r| r == 0.0) {
        return Err(Error::DegenerateResiduals("all residuals are zero".into()));
    }
    if opts.draws == 0 || opts.thin == 0 {
        return Err(Error::InvalidParameter("draws and thin must be positive".into()));
    }
    let abs: Vec<f64> = residuals.iter().map(|r| r.abs()).collect();
    let target = LogTarget { abs_residuals: &abs, bounds };

    // start at the moment-matched Gaussian member, pulled inside the box
    let second = abs.iter().map(|r| r * r).sum::<f64>() / abs.len() as f64;
    let beta0 = 2.0f64.min(0.5 * bounds.0);
    let lambda0 = (2.0 * second).sqrt().clamp(1e-6 * bounds.1, 0.5 * bounds.1);
    let mut state = (beta0.ln(), lambda0.ln());
    let mut current = target.eval(state.0, state.1);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut log_step = opts.initial_step.ln();
    let batch = 50;
    let mut batch_accepts = 0usize;
    let mut batches = 0usize;
    let step = |state: &mut (f64, f64), current: &mut f64, scale: f64, rng: &mut ChaCha8Rng| -> bool {
        let e0: f64 = rng.sample(StandardNormal);
        let e1: f64 = rng.sample(StandardNormal);
        let proposal = (state.0 + scale * e0, state.1 + scale * e1);
        let value = target.eval(proposal.0, proposal.1);
        let accept = value.is_finite() && (value >= *current || rng.gen::<f64>().ln() < value - *current);
        if accept {
            *state = proposal;
            *current = value;
        }
        accept
    };

    for it in 0..opts.burn_in {
        if step(&mut state, &mut current, log_step.exp(), &mut rng) {
            batch_accepts += 1;
        }
        if (it + 1) % batch == 0 {
            batches += 1;
            let rate = batch_accepts as f64 / batch as f64;
            log_step += (rate - opts.target_acceptance) / (batches as f64).sqrt();
            batch_accepts = 0;
        }
    }

    let scale = log_step.exp();
    let mut draws = Vec::with_capacity(opts.draws);
    let mut accepted = 0usize;
    let total = opts.draws * opts.thin;
    for it in 0..total {
        if step(&mut state, &mut current, scale, &mut rng) {
            accepted += 1;
        }
        if (it + 1) % opts.thin == 0 {
            draws.push(GnParams { shape: state.0.exp(), scale: state.1.exp() });
        }
    }
    Ok(GnPosterior { draws, bounds, acceptance_rate: accepted as f64 / total as f64, seed })
}

/// Lower empirical `q`-quantile of `values`: the order statistic at
/// 1-based index `⌈qK⌉` (at least 1).
pub fn lower_quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let k = sorted.len();
    // guard against qK landing just above an integer through rounding
    let idx = ((q * k as f64) - 1e-9).ceil().clamp(1.0, k as f64) as usize;
    sorted[idx - 1]
}

/// The `(1 − δ)` posterior quantile `v*` of the GN variance.
pub fn rule1_target(post: &GnPosterior, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    if post.draws.is_empty() {
        return Err(Error::InvalidParameter("empty posterior".into()));
    }
    let v: Vec<f64> = post.draws.iter().map(GnParams::variance).collect();
    Ok(lower_quantile(&v, 1.0 - delta))
}

/// Conservative rule: the draw whose variance is nearest `v*`, ties to the
/// smaller index.
pub fn select_rule1(post: &GnPosterior, delta: f64) -> Result<GnParams> {
    let target = rule1_target(post, delta)?;
    let mut best = 0;
    let mut best_gap = f64::INFINITY;
    for (j, d) in post.draws.iter().enumerate() {
        let gap = (d.variance() - target).abs();
        if gap < best_gap {
            best = j;
            best_gap = gap;
        }
    }
    Ok(post.draws[best])
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidProbability(delta))
    }
}

/// `T_j(1 − δ)` for every draw. Above [`RULE2_SUBSAMPLE`] draws each `j`
/// uses a seeded subsample of the other indices.
pub fn rule2_scores(post: &GnPosterior, delta: f64) -> Result<Vec<f64>> {
    check_delta(delta)?;
    let k = post.draws.len();
    if k < 2 {
        return Err(Error::InvalidParameter("rule 2 needs at least two draws".into()));
    }
    let laws: Vec<GnLaw> = post.draws.iter().map(|&d| GnLaw::new(d)).collect();
    let scores = (0..k)
        .into_par_iter()
        .map(|j| {
            let others: Vec<usize> = if k - 1 > RULE2_SUBSAMPLE {
                let mut rng = ChaCha8Rng::seed_from_u64(post.seed ^ (0x5EED_0000_0000_0000 | j as u64));
                sample_indices(&mut rng, k - 1, RULE2_SUBSAMPLE)
                    .into_iter()
                    .map(|i| if i >= j { i + 1 } else { i })
                    .collect()
            } else {
                (0..k).filter(|&i| i != j).collect()
            };
            let dist: Vec<f64> = others.iter().map(|&i| kolmogorov_between(&laws[i], &laws[j])).collect();
            lower_quantile(&dist, 1.0 - delta)
        })
        .collect();
    Ok(scores)
}

/// Calibration rule: `argmin_j T_j(1 − δ)`, ties to the smaller index.
pub fn select_rule2(post: &GnPosterior, delta: f64) -> Result<GnParams> {
    let scores = rule2_scores(post, delta)?;
    let mut best = 0;
    for (j, &t) in scores.iter().enumerate() {
        if t < scores[best] {
            best = j;
        }
    }
    Ok(post.draws[best])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BcrPredictive {
    pub gp_posterior: Posterior,
    pub selected: GnParams,
}

impl BcrPredictive {
    pub fn new(gp: &FittedGp, x: &[f64], selected: GnParams) -> Result<Self> {
        Ok(Self { gp_posterior: gp.posterior(x)?, selected })
    }

    fn standardize(&self, z: f64) -> f64 {
        (z - self.gp_posterior.mean) / self.gp_posterior.sd
    }

    pub fn cdf(&self, z: f64) -> f64 {
        if self.gp_posterior.sd == 0.0 {
            return f64::from(z >= self.gp_posterior.mean);
        }
        self.selected.cdf(self.standardize(z))
    }

    pub fn pdf(&self, z: f64) -> f64 {
        if self.gp_posterior.sd == 0.0 {
            return if z == self.gp_posterior.mean { f64::INFINITY } else { 0.0 };
        }
        self.selected.pdf(self.standardize(z)) / self.gp_posterior.sd
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        Ok(self.gp_posterior.mean + self.gp_posterior.sd * self.selected.quantile(p)?)
    }

    /// The shared predictive representation; Dirac when `σ_n(x) = 0`.
    pub fn to_predictive(&self) -> Predictive {
        let Posterior { mean, sd } = self.gp_posterior;
        if sd == 0.0 {
            Predictive::Dirac(mean)
        } else {
            Predictive::GeneralizedNormal { location: mean, scale: sd * self.selected.scale, shape: self.selected.shape }
        }
    }
}

pub fn bcr_predictive(gp: &FittedGp, x: &[f64], selected: GnParams) -> Result<BcrPredictive> {
    BcrPredictive::new(gp, x, selected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gn::kolmogorov_distance;

    fn post_of(draws: Vec<GnParams>) -> GnPosterior {
        GnPosterior { draws, bounds: DEFAULT_BOUNDS, acceptance_rate: 0.3, seed: 0 }
    }

    #[test]
    fn lower_quantile_convention() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(lower_quantile(&v, 0.75), 3.0);
        assert_eq!(lower_quantile(&v, 0.76), 4.0);
        assert_eq!(lower_quantile(&v, 0.01), 1.0);
        // 0.9 · 3000 is 2700.0000000000005 in floating point
        let w: Vec<f64> = (1..=3000).map(f64::from).collect();
        assert_eq!(lower_quantile(&w, 0.9), 2700.0);
    }

    #[test]
    fn rule1_hand_enumeration() {
        // variances 1, 2, 3, 4 at β = 2: λ² / 2 = v
        let draws: Vec<GnParams> = [3.0, 1.0, 4.0, 2.0].iter().map(|v: &f64| GnParams::new(2.0, (2.0 * v).sqrt()).unwrap()).collect();
        let post = post_of(draws.clone());
        let chosen = select_rule1(&post, 0.25).unwrap();
        assert_eq!(chosen, draws[0]);
        assert_eq!(select_rule1(&post, 1e-6).unwrap(), draws[2]);
        let single = post_of(vec![draws[1]]);
        assert_eq!(select_rule1(&single, 0.4).unwrap(), draws[1]);
    }

    #[test]
    fn rule2_small_cases() {
        let a = GnParams::new(1.5, 1.0).unwrap();
        let b = GnParams::new(3.0, 2.0).unwrap();
        let s = rule2_scores(&post_of(vec![a, b]), 0.1).unwrap();
        assert_eq!(s[0], s[1]);
        assert_eq!(select_rule2(&post_of(vec![a, b]), 0.1).unwrap(), a);
        let same = rule2_scores(&post_of(vec![a; 5]), 0.1).unwrap();
        assert!(same.iter().all(|&t| t == 0.0));
        assert!((s[0] - kolmogorov_distance(&a, &b)).abs() < 1e-15);
    }

    fn gaussian_residuals(seed: u64, n: usize) -> Vec<f64> {
        let truth = GnParams::standard_normal();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| truth.sample(&mut rng)).collect()
    }

    fn posterior_means(post: &GnPosterior) -> (f64, f64) {
        let k = post.draws.len() as f64;
        (post.draws.iter().map(|d| d.shape).sum::<f64>() / k, post.draws.iter().map(|d| d.scale).sum::<f64>() / k)
    }

    // Exact posterior means by quadrature on a (β, λ) grid under the flat prior.
    fn grid_posterior_means(r: &[f64]) -> (f64, f64) {
        let mut cells = Vec::new();
        for i in 1..1000 {
            let b = i as f64 * 0.01;
            for j in 1..200 {
                let l = 0.8 + j as f64 * 0.005;
                let g = GnParams { shape: b, scale: l };
                cells.push((b, l, r.iter().map(|&x| g.ln_pdf(x)).sum::<f64>()));
            }
        }
        let top = cells.iter().map(|c| c.2).fold(f64::NEG_INFINITY, f64::max);
        let (mut z, mut mb, mut ml) = (0.0, 0.0, 0.0);
        for (b, l, ll) in cells {
            let w = (ll - top).exp();
            z += w;
            mb += w * b;
            ml += w * l;
        }
        (mb / z, ml / z)
    }

    #[test]
    fn sampler_matches_grid_posterior() {
        let r = gaussian_residuals(42, 500);
        let post = posterior_sample(&r, DEFAULT_BOUNDS, 3000, 9).unwrap();
        assert_eq!(post.draws.len(), 3000);
        let (mb, ml) = posterior_means(&post);
        let (gb, gl) = grid_posterior_means(&r);
        assert!((mb - gb).abs() < 0.05 && (ml - gl).abs() < 0.03, "{mb} {gb} {ml} {gl}");
        assert!(post.acceptance_rate > 0.15 && post.acceptance_rate < 0.5, "{}", post.acceptance_rate);
        assert!(post.draws.iter().all(|d| d.shape < 10.0 && d.scale < 10.0));
        assert_eq!(post, posterior_sample(&r, DEFAULT_BOUNDS, 3000, 9).unwrap());
    }

    // One dataset of 500 residuals leaves a posterior sd of about 0.2 on β,
    // so the tolerance is applied to the average over independent datasets.
    #[test]
    fn recovers_gaussian_residual_law() {
        let runs = 20u64;
        let (mut sb, mut sl) = (0.0, 0.0);
        for s in 0..runs {
            let post = posterior_sample(&gaussian_residuals(100 + s, 500), DEFAULT_BOUNDS, 3000, s).unwrap();
            let (mb, ml) = posterior_means(&post);
            sb += mb;
            sl += ml;
        }
        let (mb, ml) = (sb / runs as f64, sl / runs as f64);
        assert!((mb - 2.0).abs() < 0.3 && (ml - 2f64.sqrt()).abs() < 0.3, "{mb} {ml}");
    }

    #[test]
    fn degenerate_residuals_rejected() {
        assert!(matches!(posterior_sample(&[0.0; 10], DEFAULT_BOUNDS, 100, 1), Err(Error::DegenerateResiduals(_))));
        assert!(posterior_sample(&[1.0, -1.0], DEFAULT_BOUNDS, 100, 1).is_err());
    }
}
