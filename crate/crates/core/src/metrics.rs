//! Calibration and scoring metrics over a test design.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gn::GnParams;
use crate::predictive::{Kind, PredictionInterval, Predictive};
use crate::special::{norm_cdf, norm_pdf};

/// Number of α-grid intervals for IAE; the grid has `IAE_GRID + 1` levels.
pub const IAE_GRID: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PitSample {
    pub values: Vec<f64>,
    pub randomized: bool,
    pub seed: u64,
}

fn check_lengths(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { left: a, right: b });
    }
    if a == 0 {
        return Err(Error::InvalidParameter("empty test set".into()));
    }
    Ok(())
}

/// PIT values `U_j`. Continuous kinds give `F(z_j)`; empirical and Dirac
/// kinds randomize across the jump with i.i.d. `τ_j` drawn from `seed`;
/// stepwise CPDs already carry their own `τ`.
pub fn pit_values(predictives: &[Predictive], truths: &[f64], seed: u64) -> Result<PitSample> {
    check_lengths(predictives.len(), truths.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut randomized = false;
    let values = predictives
        .iter()
        .zip(truths)
        .map(|(p, &z)| {
            let tau: f64 = rng.gen();
            randomized |= p.kind() != Kind::SmoothParametric;
            p.pit(z, tau).clamp(0.0, 1.0)
        })
        .collect();
    Ok(PitSample { values, randomized, seed })
}

/// `sup_u |Ĝ_m(u) − u|` from the order statistics.
pub fn ks_pit(values: &[f64]) -> f64 {
    let mut u = values.to_vec();
    u.sort_by(f64::total_cmp);
    let m = u.len() as f64;
    u.iter()
        .enumerate()
        .map(|(j, &v)| (v - j as f64 / m).abs().max((v - (j + 1) as f64 / m).abs()))
        .fold(0.0, f64::max)
}

/// `(1/m) Σ (U_j − 1/2)² − 1/12`; positive for ∪-shaped PIT histograms.
pub fn var_pit(values: &[f64]) -> f64 {
    values.iter().map(|u| (u - 0.5).powi(2)).sum::<f64>() / values.len() as f64 - 1.0 / 12.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageRow {
    pub level: f64,
    pub coverage: f64,
    /// Mean width over finite intervals; NaN when none is finite.
    pub mean_width: f64,
    pub infinite_count: usize,
}

pub fn intervals(predictives: &[Predictive], level: f64) -> Result<Vec<PredictionInterval>> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidProbability(level));
    }
    predictives.iter().map(|p| p.interval(1.0 - level)).collect()
}

pub fn coverage_row(ints: &[PredictionInterval], truths: &[f64], level: f64) -> Result<CoverageRow> {
    check_lengths(ints.len(), truths.len())?;
    let hits = ints.iter().zip(truths).filter(|(i, &z)| i.contains(z)).count();
    let finite: Vec<f64> = ints.iter().filter(|i| i.is_finite()).map(PredictionInterval::width).collect();
    let mean_width = if finite.is_empty() { f64::NAN } else { finite.iter().sum::<f64>() / finite.len() as f64 };
    Ok(CoverageRow {
        level,
        coverage: hits as f64 / truths.len() as f64,
        mean_width,
        infinite_count: ints.len() - finite.len(),
    })
}

pub fn coverage_and_width(predictives: &[Predictive], truths: &[f64], levels: &[f64]) -> Result<Vec<CoverageRow>> {
    levels.iter().map(|&l| coverage_row(&intervals(predictives, l)?, truths, l)).collect()
}

/// Coverage of the degenerate `α = 1` interval `[q(1/2), q(1/2)]`,
/// empty for the half-open stepwise kind.
fn median_hit(p: &Predictive, z: f64) -> bool {
    match p {
        Predictive::Stepwise(_) => false,
        _ => p.quantile(0.5) == Ok(z),
    }
}

/// `∫₀¹ |δ_α − (1 − α)| dα` on a 201-point α-grid, trapezoid rule, with
/// `δ_0 = 1`.
pub fn iae(predictives: &[Predictive], truths: &[f64]) -> Result<f64> {
    check_lengths(predictives.len(), truths.len())?;
    let m = truths.len() as f64;
    let mut gaps = Vec::with_capacity(IAE_GRID + 1);
    for k in 0..=IAE_GRID {
        let alpha = k as f64 / IAE_GRID as f64;
        let delta = if k == 0 {
            1.0
        } else if k == IAE_GRID {
            predictives.iter().zip(truths).filter(|(p, &z)| median_hit(p, z)).count() as f64 / m
        } else {
            let mut hits = 0usize;
            for (p, &z) in predictives.iter().zip(truths) {
                if p.interval(alpha)?.contains(z) {
                    hits += 1;
                }
            }
            hits as f64 / m
        };
        gaps.push((delta - (1.0 - alpha)).abs());
    }
    let h = 1.0 / IAE_GRID as f64;
    Ok(h * (gaps.iter().sum::<f64>() - 0.5 * (gaps[0] + gaps[IAE_GRID])))
}

/// `(E|Z − z|, E|Z − Z′|)` for the predictive law. Stepwise CPDs are
/// scored through their atom law, with tail mass on the extreme atoms.
pub fn dispersion_pair(p: &Predictive, z: f64) -> Result<(f64, f64)> {
    Ok(match p {
        Predictive::Gaussian { mean, sd } => {
            let u = (z - mean) / sd;
            (sd * (u * (2.0 * norm_cdf(u) - 1.0) + 2.0 * norm_pdf(u)), 2.0 * sd / std::f64::consts::PI.sqrt())
        }
        Predictive::GeneralizedNormal { location, scale, shape } => {
            let g = GnParams::new(*shape, *scale)?;
            (g.mean_abs_deviation(z - location), g.mean_abs_difference()?)
        }
        Predictive::Stepwise(f) => {
            let law = f.scoring_law();
            (law.mean_abs_deviation(z), law.mean_abs_difference())
        }
        Predictive::Empirical(law) => (law.mean_abs_deviation(z), law.mean_abs_difference()),
        Predictive::Dirac(v) => ((v - z).abs(), 0.0),
    })
}

/// `E|Z − z| − ½E|Z − Z′|`
pub fn crps(p: &Predictive, z: f64) -> Result<f64> {
    let (dev, disp) = dispersion_pair(p, z)?;
    Ok(dev - 0.5 * disp)
}

/// `−E|Z − z| / E|Z − Z′| − ½ ln E|Z − Z′|`; larger is better.
pub fn scrps(p: &Predictive, z: f64) -> Result<f64> {
    let (dev, disp) = dispersion_pair(p, z)?;
    if !(disp > 0.0) {
        return Err(Error::InvalidParameter("scrps needs a non-degenerate law".into()));
    }
    Ok(-dev / disp - 0.5 * disp.ln())
}

pub fn rmse(means: &[f64], truths: &[f64]) -> Result<f64> {
    check_lengths(means.len(), truths.len())?;
    Ok((means.iter().zip(truths).map(|(m, z)| (m - z).powi(2)).sum::<f64>() / means.len() as f64).sqrt())
}

/// Metrics for one method on one test design. Fields that need a full
/// predictive law are `None` for interval-only methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub coverage: Vec<CoverageRow>,
    pub ks_pit: Option<f64>,
    pub var_pit: Option<f64>,
    pub iae: Option<f64>,
    pub rmse: f64,
    pub crps: Option<f64>,
    pub scrps: Option<f64>,
}

impl MetricsReport {
    /// Scores full predictive laws. Dirac predictives (test points on the
    /// design) are left out of the SCRPS mean, where the score is undefined.
    pub fn from_predictives(predictives: &[Predictive], truths: &[f64], means: &[f64], levels: &[f64], seed: u64) -> Result<Self> {
        let pit = pit_values(predictives, truths, seed)?;
        let mut crps_sum = 0.0;
        let mut scrps_sum = 0.0;
        let mut scrps_n = 0usize;
        let mut scored = true;
        for (p, &z) in predictives.iter().zip(truths) {
            match dispersion_pair(p, z) {
                Ok((dev, disp)) => {
                    crps_sum += dev - 0.5 * disp;
                    if p.kind() != Kind::Dirac {
                        scrps_sum += scrps(p, z)?;
                        scrps_n += 1;
                    }
                }
                // a shape outside the dispersion table leaves the scores undefined
                Err(e @ Error::OutsideTable { .. }) => {
                    log::warn!("scores skipped: {e}");
                    scored = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        let m = truths.len() as f64;
        Ok(Self {
            coverage: coverage_and_width(predictives, truths, levels)?,
            ks_pit: Some(ks_pit(&pit.values)),
            var_pit: Some(var_pit(&pit.values)),
            iae: Some(iae(predictives, truths)?),
            rmse: rmse(means, truths)?,
            crps: scored.then(|| crps_sum / m),
            scrps: (scored && scrps_n > 0).then(|| scrps_sum / scrps_n as f64),
        })
    }

    /// Interval-only methods: `intervals[k]` holds the intervals at `levels[k]`.
    pub fn from_intervals(intervals: &[Vec<PredictionInterval>], truths: &[f64], means: &[f64], levels: &[f64]) -> Result<Self> {
        check_lengths(intervals.len(), levels.len())?;
        let coverage = intervals
            .iter()
            .zip(levels)
            .map(|(ints, &l)| coverage_row(ints, truths, l))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { coverage, ks_pit: None, var_pit: None, iae: None, rmse: rmse(means, truths)?, crps: None, scrps: None })
    }

    pub fn row(&self, level: f64) -> Option<&CoverageRow> {
        self.coverage.iter().find(|r| (r.level - level).abs() < 1e-12)
    }
}
