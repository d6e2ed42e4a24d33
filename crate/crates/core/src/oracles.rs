//! Brute-force reference computations for the fast closed forms, shared by
//! `gpcal selftest` and the integration tests.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cps::{compute_thresholds, cps_pit};
use crate::error::Result;
use crate::gn::{kolmogorov_distance, GnParams};
use crate::gp::{Dataset, FittedGp, KernelParams, BASE_JITTER};
use crate::special::norm_cdf;

/// A random well-conditioned interpolation problem with fixed hyperparameters.
#[derive(Debug, Clone)]
pub struct Instance {
    pub gp: FittedGp,
}

fn smooth_response(x: &[f64], coef: &[(f64, f64, f64)]) -> f64 {
    coef.iter().enumerate().map(|(k, (a, w, ph))| a * (w * x[k % x.len()] + ph).sin()).sum()
}

/// Draws `d ∈ [1, max_d]`, `n ∈ [5, max_n]`, uniform points on the unit cube
/// and a smooth response, with hyperparameters drawn independently of the
/// data. Redraws until the base nugget suffices.
pub fn random_instance<R: Rng>(rng: &mut R, max_d: usize, max_n: usize) -> Instance {
    loop {
        let d = rng.gen_range(1..=max_d);
        let n = rng.gen_range(5..=max_n);
        let points: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| rng.gen()).collect()).collect();
        let coef: Vec<(f64, f64, f64)> =
            (0..3).map(|_| (rng.gen_range(0.5..2.0), rng.gen_range(1.0..6.0), rng.gen_range(0.0..6.3))).collect();
        let responses = points.iter().map(|x| smooth_response(x, &coef)).collect();
        let params = KernelParams::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(0.5..2.0),
            (0..d).map(|_| rng.gen_range(0.05..0.3)).collect(),
            rng.gen_range(0..=2),
        )
        .expect("valid draw");
        let Ok(data) = Dataset::new(points, responses, vec![(0.0, 1.0); d]) else { continue };
        match FittedGp::new(data, params) {
            Ok(gp) if gp.jitter() == BASE_JITTER => return Instance { gp },
            _ => continue,
        }
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

/// Largest error between the closed-form leave-one-out means and sds and
/// delete-one refits, relative to `max(|refit|, 1)`. `None` when a refit
/// needs a larger nugget than the full fit.
pub fn loo_refit_error(gp: &FittedGp) -> Result<Option<f64>> {
    let loo = gp.loo()?;
    let data = gp.dataset();
    let mut worst: f64 = 0.0;
    for i in 0..gp.len() {
        let sub = FittedGp::new(data.without(i)?, gp.params().clone())?;
        if sub.jitter() != gp.jitter() {
            return Ok(None);
        }
        let p = sub.posterior(&data.points()[i])?;
        worst = worst.max(rel_err(loo.means[i], p.mean)).max(rel_err(loo.sds[i], p.sd));
    }
    Ok(Some(worst))
}

/// Result of the affine-difference check at one test point.
#[derive(Debug, Clone, Copy)]
pub struct AffineCheck {
    /// Largest `|(R_{n+1}^z − R_i^z) − β_i (z − c_i)| / max(1, |β_i (z − c_i)|)`.
    pub max_error: f64,
    pub min_slope: f64,
}

/// Refits the augmented dataset at each `z` of a `grid`-point grid spanning
/// the thresholds and compares leave-one-out score gaps with the closed form.
pub fn affine_difference_check(gp: &FittedGp, x_star: &[f64], grid: usize) -> Result<AffineCheck> {
    let ts = compute_thresholds(gp, x_star)?;
    let lo = ts.thresholds.iter().cloned().fold(f64::INFINITY, f64::min).min(ts.test_mean - 3.0 * ts.test_sd);
    let hi = ts.thresholds.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(ts.test_mean + 3.0 * ts.test_sd);
    let data = gp.dataset();
    let n = gp.len();
    let mut points = data.points().to_vec();
    points.push(x_star.to_vec());
    let mut max_error: f64 = 0.0;
    for k in 0..grid {
        let z = lo + (hi - lo) * k as f64 / (grid - 1) as f64;
        let mut responses = data.responses().to_vec();
        responses.push(z);
        let aug = FittedGp::new(Dataset::new(points.clone(), responses, data.domain().to_vec())?, gp.params().clone())?;
        let r = aug.loo()?.residuals;
        for i in 0..n {
            let expected = ts.slopes[i] * (z - ts.thresholds[i]);
            let got = r[n] - r[i];
            max_error = max_error.max((got - expected).abs() / expected.abs().max(1.0));
        }
    }
    let min_slope = ts.slopes.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(AffineCheck { max_error, min_slope })
}

/// Worst `|F_{GN(2,0,λ)} − Φ(·/(λ/√2))|` over a grid of `z` and `λ`.
pub fn gn_gaussian_cdf_error() -> f64 {
    let mut worst: f64 = 0.0;
    for &lambda in &[0.3, 1.0, 2.0_f64.sqrt(), 5.0] {
        let g = GnParams { shape: 2.0, scale: lambda };
        let sd = lambda / 2.0_f64.sqrt();
        for k in -400..=400 {
            let z = k as f64 * 0.02 * lambda;
            worst = worst.max((g.cdf(z) - norm_cdf(z / sd)).abs());
        }
    }
    worst
}

/// Sample variance of `m` draws and its standard error.
pub fn monte_carlo_variance(g: &GnParams, m: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs: Vec<f64> = (0..m).map(|_| g.sample(&mut rng)).collect();
    let mean = xs.iter().sum::<f64>() / m as f64;
    let c2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / m as f64;
    let c4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / m as f64;
    (c2, ((c4 - c2 * c2) / m as f64).sqrt())
}

/// Kolmogorov distance by scanning `points` quantiles of each law.
pub fn kolmogorov_grid(a: &GnParams, b: &GnParams, points: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for law in [a, b] {
        for k in 1..points {
            let z = law.quantile(k as f64 / points as f64).expect("interior probability");
            worst = worst.max((a.cdf(z) - b.cdf(z)).abs());
        }
    }
    worst
}

/// Worst gap between the exact Kolmogorov distance and the grid scan over
/// `pairs` random GN pairs, and whether any exact value fell below the scan.
pub fn kolmogorov_check(pairs: usize, seed: u64) -> (f64, bool) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut below = false;
    for _ in 0..pairs {
        let a = GnParams { shape: rng.gen_range(0.3..8.0), scale: rng.gen_range(0.1..4.0) };
        let b = GnParams { shape: rng.gen_range(0.3..8.0), scale: rng.gen_range(0.1..4.0) };
        let exact = kolmogorov_distance(&a, &b);
        let grid = kolmogorov_grid(&a, &b, 10_000);
        below |= exact < grid - 1e-12;
        worst = worst.max(exact - grid);
    }
    (worst, below)
}

/// Conformal PIT values `π(Z_{n+1})` over `reps` replications: hyperparameters
/// fixed before seeing data, `n + 1` i.i.d. uniform inputs on `[0,1]²`
/// with a fixed smooth response, and a fresh uniform tie-breaker.
pub fn exchangeable_pits(reps: usize, n: usize, seed: u64) -> Result<Vec<f64>> {
    let params = KernelParams::new(0.0, 1.0, vec![0.3, 0.3], 2)?;
    let f = |x: &[f64]| (3.0 * x[0]).sin() + (2.0 * x[1]).cos() + x[0] * x[1];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pits = Vec::with_capacity(reps);
    for _ in 0..reps {
        let pts: Vec<Vec<f64>> = (0..=n).map(|_| vec![rng.gen(), rng.gen()]).collect();
        let z: Vec<f64> = pts.iter().map(|x| f(x)).collect();
        let tau: f64 = rng.gen();
        let data = Dataset::new(pts[..n].to_vec(), z[..n].to_vec(), vec![(0.0, 1.0); 2])?;
        let gp = FittedGp::new(data, params.clone())?;
        pits.push(cps_pit(&gp, &pts[n], z[n], tau)?);
    }
    Ok(pits)
}

/// Dvoretzky–Kiefer–Wolfowitz radius at confidence `1 − a` for `m` samples.
pub fn dkw_bound(m: usize, a: f64) -> f64 {
    ((2.0 / a).ln() / (2.0 * m as f64)).sqrt()
}

#[derive(Debug, Clone)]
pub struct OracleOutcome {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn outcome(name: &'static str, passed: bool, detail: String) -> OracleOutcome {
    OracleOutcome { name, passed, detail }
}

/// The self-test battery: leave-one-out refits, affine differences, GN
/// analytics, Kolmogorov exactness and conformal PIT uniformity.
pub fn selftest_suite(seed: u64) -> Vec<OracleOutcome> {
    let mut out = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut worst: f64 = 0.0;
    let mut errors = Vec::new();
    let mut done = 0;
    while done < 50 {
        let inst = random_instance(&mut rng, 3, 30);
        match loo_refit_error(&inst.gp) {
            Ok(Some(e)) => {
                worst = worst.max(e);
                done += 1;
            }
            Ok(None) => {}
            Err(e) => {
                errors.push(e.to_string());
                done += 1;
            }
        }
    }
    out.push(outcome("loo-refit", errors.is_empty() && worst <= 1e-8, format!("max relative error {worst:.2e} over 50 instances")));

    let mut worst: f64 = 0.0;
    let mut min_slope = f64::INFINITY;
    let mut failed = None;
    for _ in 0..50 {
        let inst = random_instance(&mut rng, 3, 30);
        let x: Vec<f64> = (0..inst.gp.dim()).map(|_| rng.gen()).collect();
        match affine_difference_check(&inst.gp, &x, 21) {
            Ok(c) => {
                worst = worst.max(c.max_error);
                min_slope = min_slope.min(c.min_slope);
            }
            Err(e) => failed = Some(e.to_string()),
        }
    }
    out.push(outcome(
        "affine-difference",
        failed.is_none() && worst <= 1e-8 && min_slope > 0.0,
        format!("max error {worst:.2e}, min slope {min_slope:.3e}{}", failed.map(|e| format!(", error: {e}")).unwrap_or_default()),
    ));

    let cdf_err = gn_gaussian_cdf_error();
    let mut var_ok = true;
    let mut var_detail = Vec::new();
    for (k, &beta) in [0.7, 1.0, 2.0, 4.0].iter().enumerate() {
        let g = GnParams { shape: beta, scale: 1.3 };
        let (v, se) = monte_carlo_variance(&g, 200_000, seed ^ (k as u64 + 1));
        let z = (v - g.variance()).abs() / se;
        var_ok &= z <= 3.0;
        var_detail.push(format!("β={beta}: {z:.2} SE"));
    }
    out.push(outcome(
        "gn-analytics",
        cdf_err <= 1e-10 && var_ok,
        format!("normal cdf error {cdf_err:.2e}; variance {}", var_detail.join(", ")),
    ));

    let (gap, below) = kolmogorov_check(100, seed ^ 0x4b53);
    out.push(outcome("ks-exactness", gap <= 1e-4 && !below, format!("max excess over grid scan {gap:.2e}")));

    match exchangeable_pits(1000, 30, seed ^ 0x5049) {
        Ok(pits) => {
            let ks = crate::metrics::ks_pit(&pits);
            let bound = dkw_bound(pits.len(), 0.01);
            out.push(outcome("conformal-pit", ks <= bound, format!("KS {ks:.4} vs DKW 99% bound {bound:.4} (m = 1000)")));
        }
        Err(e) => out.push(outcome("conformal-pit", false, e.to_string())),
    }
    out
}
