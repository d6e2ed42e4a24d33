//! Fast paths against brute-force refits and dense scans.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gpcal::baselines::{jackknife_plus_interval, jackknife_scores, RadiusMode};
use gpcal::bcr::{rule2_scores, select_rule2, GnPosterior, DEFAULT_BOUNDS};
use gpcal::cps::compute_thresholds;
use gpcal::gn::GnParams;
use gpcal::gp::BASE_JITTER;
use gpcal::oracles::{affine_difference_check, kolmogorov_check, kolmogorov_grid, loo_refit_error, random_instance};
use gpcal::{Dataset, FittedGp};

fn instances(seed: u64, count: usize) -> Vec<FittedGp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| random_instance(&mut rng, 3, 20).gp).collect()
}

#[test]
fn closed_form_loo_matches_refits() {
    for gp in instances(1, 20) {
        if let Some(e) = loo_refit_error(&gp).unwrap() {
            assert!(e < 1e-8, "relative error {e}");
        }
    }
}

#[test]
fn threshold_differences_are_affine_with_positive_slopes() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for gp in instances(2, 10) {
        let x: Vec<f64> = (0..gp.dim()).map(|_| rng.gen()).collect();
        let c = affine_difference_check(&gp, &x, 15).unwrap();
        assert!(c.max_error < 1e-8, "error {}", c.max_error);
        assert!(c.min_slope > 0.0);
    }
}

/// Randomized rank of the test score computed from the augmented fit.
fn brute_force_cpd(gp: &FittedGp, x: &[f64], z: f64, tau: f64) -> Option<f64> {
    let d = gp.dataset();
    let mut pts = d.points().to_vec();
    let mut zs = d.responses().to_vec();
    pts.push(x.to_vec());
    zs.push(z);
    let aug = FittedGp::new(Dataset::new(pts, zs, d.domain().to_vec()).unwrap(), gp.params().clone()).unwrap();
    if aug.jitter() != BASE_JITTER {
        return None;
    }
    let r = aug.loo().unwrap().residuals;
    let n = gp.len();
    let below = r[..n].iter().filter(|&&ri| ri < r[n]).count();
    Some((below as f64 + tau) / (n + 1) as f64)
}

#[test]
fn conformal_cdf_matches_augmented_refits() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for gp in instances(3, 8) {
        let x: Vec<f64> = (0..gp.dim()).map(|_| rng.gen()).collect();
        let th = compute_thresholds(&gp, &x).unwrap();
        let tau: f64 = rng.gen();
        let cpd = th.cpd(tau);
        let post = gp.posterior(&x).unwrap();
        let mut c: Vec<f64> = cpd.thresholds().to_vec();
        c.push(post.mean - 4.0 * post.sd);
        c.push(post.mean + 4.0 * post.sd);
        c.sort_by(f64::total_cmp);
        // midpoints stay away from the jumps
        for w in c.windows(2) {
            let z = 0.5 * (w[0] + w[1]);
            if w[1] - w[0] < 1e-6 {
                continue;
            }
            if let Some(expected) = brute_force_cpd(&gp, &x, z, tau) {
                assert!((cpd.eval(z) - expected).abs() < 1e-12, "z {z}: {} vs {expected}", cpd.eval(z));
            }
        }
    }
}

#[test]
fn jackknife_plus_matches_delete_one_refits() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for gp in instances(4, 6) {
        let x: Vec<f64> = (0..gp.dim()).map(|_| rng.gen()).collect();
        let s = jackknife_scores(&gp, &x).unwrap();
        let loo = gp.loo().unwrap();
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        for i in 0..gp.len() {
            let refit = FittedGp::new(gp.dataset().without(i).unwrap(), gp.params().clone()).unwrap();
            if refit.jitter() != BASE_JITTER {
                continue;
            }
            let p = refit.posterior(&x).unwrap();
            assert!((s.loo_means[i] - p.mean).abs() < 1e-7 * p.mean.abs().max(1.0));
            assert!((s.loo_sds[i] - p.sd).abs() < 1e-7 * p.sd.max(1e-3));
            assert!((s.residual_magnitudes[i] - loo.residuals[i].abs()).abs() < 1e-8 * loo.residuals[i].abs().max(1.0));
            let r = loo.residuals[i].abs() * p.sd;
            lower.push(p.mean - r);
            upper.push(p.mean + r);
        }
        if lower.len() < gp.len() {
            continue;
        }
        lower.sort_by(f64::total_cmp);
        upper.sort_by(f64::total_cmp);
        let n = gp.len();
        let alpha = 0.2;
        let k_lo = ((alpha * (n + 1) as f64) + 1e-9).floor() as usize;
        let k_hi = (((1.0 - alpha) * (n + 1) as f64) - 1e-9).ceil() as usize;
        let int = jackknife_plus_interval(&gp, &x, alpha, RadiusMode::Standardized).unwrap();
        if k_lo >= 1 {
            assert!((int.lower - lower[k_lo - 1]).abs() < 1e-6);
        }
        if k_hi <= n {
            assert!((int.upper - upper[k_hi - 1]).abs() < 1e-6);
        }
    }
}

#[test]
fn exact_kolmogorov_distance_dominates_grid_scan() {
    let (excess, below) = kolmogorov_check(30, 5);
    assert!(!below);
    assert!(excess < 1e-3, "excess {excess}");
}

#[test]
fn rule2_matches_dense_grid_on_fifty_draws() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let draws: Vec<GnParams> =
        (0..50).map(|_| GnParams { shape: rng.gen_range(1.0..4.0), scale: rng.gen_range(0.8..2.0) }).collect();
    let post = GnPosterior { draws: draws.clone(), bounds: DEFAULT_BOUNDS, acceptance_rate: 0.3, seed: 0 };
    let delta = 0.1;
    let scores = rule2_scores(&post, delta).unwrap();
    let grid_scores: Vec<f64> = (0..50)
        .map(|j| {
            let mut d: Vec<f64> =
                (0..50).filter(|&i| i != j).map(|i| kolmogorov_grid(&draws[i], &draws[j], 4000)).collect();
            d.sort_by(f64::total_cmp);
            // smallest t with at least (1 − δ) of the others within t
            let k = ((1.0 - delta) * d.len() as f64 - 1e-9).ceil() as usize;
            d[k - 1]
        })
        .collect();
    for (a, b) in scores.iter().zip(&grid_scores) {
        assert!((a - b).abs() < 1e-3, "{a} vs {b}");
    }
    let chosen = select_rule2(&post, delta).unwrap();
    let j = draws.iter().position(|d| *d == chosen).unwrap();
    let best = grid_scores.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(grid_scores[j] - best < 2e-3);
}
