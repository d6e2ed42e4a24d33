//! Repetition harness: designs, fits, per-method predictives and metrics.

use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{jackknife_plus_intervals, RadiusMode};
use crate::bcr::{posterior_sample, select_rule1, select_rule2, GnPosterior, DEFAULT_BOUNDS, DEFAULT_DELTA, DEFAULT_DRAWS};
use crate::cps::cps_predictive;
use crate::error::{Error, Result};
use crate::functions::{sample_design, TestFunction};
use crate::gn::GnParams;
use crate::gp::{fit_ml, Dataset, FittedGp};
use crate::metrics::MetricsReport;
use crate::predictive::{PredictionInterval, Predictive};
use crate::seeds::{derive_seed, stream, Role};

pub const DESK_REPETITIONS: usize = 20;
pub const DESK_N_TEST: usize = 2000;
pub const FULL_REPETITIONS: usize = 100;
pub const FULL_N_TEST: usize = 4000;
/// Bins of the per-run PIT histogram.
pub const PIT_BINS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MethodName {
    #[serde(rename = "gp")]
    Gp,
    #[serde(rename = "cps-gp")]
    CpsGp,
    #[serde(rename = "bcr-gp")]
    BcrGp,
    #[serde(rename = "j+gp")]
    JackknifePlusGp,
}

/// BCR selection rule: posterior variance quantile or cross-posterior KS.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Rule {
    #[default]
    Variance,
    KsPit,
}

/// One method entry. Options that do not apply to `method` must be absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub method: MethodName,
    /// Column label; derived from the options when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<Rule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    /// Fixed tie-breaker for `cps-gp`; a fresh uniform draw per point when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<RadiusMode>,
    /// Fraction γ of the design used to select hyperparameters; the GP is
    /// then conditioned on the remaining points.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub split: Option<f64>,
}

impl MethodSpec {
    pub fn plain(method: MethodName) -> Self {
        Self { method, label: None, rule: None, delta: None, tau: None, radius: None, split: None }
    }

    pub fn bcr(rule: Rule, delta: f64) -> Self {
        Self { rule: Some(rule), delta: Some(delta), ..Self::plain(MethodName::BcrGp) }
    }

    pub fn label(&self) -> String {
        if let Some(l) = &self.label {
            return l.clone();
        }
        let mut s = match self.method {
            MethodName::Gp => "gp".to_string(),
            MethodName::CpsGp => "cps-gp".to_string(),
            MethodName::JackknifePlusGp => "j+gp".to_string(),
            MethodName::BcrGp => {
                let delta = self.delta();
                match self.rule.unwrap_or_default() {
                    Rule::Variance => format!("bcr-gp({delta})"),
                    Rule::KsPit if delta == DEFAULT_DELTA => "bcr-gp(ks-pit)".to_string(),
                    Rule::KsPit => format!("bcr-gp(ks-pit;{delta})"),
                }
            }
        };
        if let Some(t) = self.tau {
            s.push_str(&format!("(tau={t})"));
        }
        if self.radius == Some(RadiusMode::Raw) {
            s.push_str("(raw)");
        }
        if let Some(g) = self.split {
            s.push_str(&format!("(split={g})"));
        }
        s
    }

    fn delta(&self) -> f64 {
        self.delta.unwrap_or(DEFAULT_DELTA)
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("method `{}`: {what}", self.label())));
        let m = self.method;
        if m != MethodName::BcrGp && (self.rule.is_some() || self.delta.is_some()) {
            return bad("rule and delta only apply to bcr-gp");
        }
        if m != MethodName::CpsGp && self.tau.is_some() {
            return bad("tau only applies to cps-gp");
        }
        if m != MethodName::JackknifePlusGp && self.radius.is_some() {
            return bad("radius only applies to j+gp");
        }
        if let Some(d) = self.delta {
            if !(d > 0.0 && d < 1.0) {
                return bad("delta must lie in (0, 1)");
            }
        }
        if let Some(t) = self.tau {
            if !(0.0..=1.0).contains(&t) {
                return bad("tau must lie in [0, 1]");
            }
        }
        if let Some(g) = self.split {
            if !(g > 0.0 && g < 1.0) {
                return bad("split must lie in (0, 1)");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub functions: Vec<String>,
    /// Design size is `design_multiplier · d`.
    #[serde(default = "default_multiplier")]
    pub design_multiplier: usize,
    #[serde(default = "default_n_test")]
    pub n_test: usize,
    #[serde(default = "default_repetitions")]
    pub repetitions: usize,
    #[serde(default = "default_regularity")]
    pub regularity: u32,
    #[serde(default = "default_levels")]
    pub levels: Vec<f64>,
    #[serde(default)]
    pub master_seed: u64,
    /// Replaces `repetitions` and `n_test` with the full-scale protocol.
    #[serde(default)]
    pub full_scale: bool,
    #[serde(default = "default_draws")]
    pub mcmc_draws: usize,
    #[serde(default = "default_methods")]
    pub methods: Vec<MethodSpec>,
}

fn default_multiplier() -> usize {
    20
}
fn default_n_test() -> usize {
    DESK_N_TEST
}
fn default_repetitions() -> usize {
    DESK_REPETITIONS
}
fn default_regularity() -> u32 {
    2
}
fn default_levels() -> Vec<f64> {
    vec![0.8, 0.9, 0.95]
}
fn default_draws() -> usize {
    DEFAULT_DRAWS
}
fn default_methods() -> Vec<MethodSpec> {
    vec![
        MethodSpec::plain(MethodName::Gp),
        MethodSpec::plain(MethodName::CpsGp),
        MethodSpec::bcr(Rule::Variance, 0.1),
        MethodSpec::bcr(Rule::Variance, 0.01),
        MethodSpec::bcr(Rule::KsPit, DEFAULT_DELTA),
        MethodSpec::plain(MethodName::JackknifePlusGp),
    ]
}

impl ExperimentConfig {
    /// Desk-scale defaults for the given functions.
    pub fn new(functions: Vec<String>) -> Self {
        Self {
            functions,
            design_multiplier: default_multiplier(),
            n_test: default_n_test(),
            repetitions: default_repetitions(),
            regularity: default_regularity(),
            levels: default_levels(),
            master_seed: 0,
            full_scale: false,
            mcmc_draws: default_draws(),
            methods: default_methods(),
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn effective_repetitions(&self) -> usize {
        if self.full_scale {
            FULL_REPETITIONS
        } else {
            self.repetitions
        }
    }

    pub fn effective_n_test(&self) -> usize {
        if self.full_scale {
            FULL_N_TEST
        } else {
            self.n_test
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.functions.is_empty() {
            return bad("no functions listed".into());
        }
        for f in &self.functions {
            TestFunction::by_name(f).map_err(|e| Error::Config(e.to_string()))?;
        }
        if self.n_test < 1 {
            return bad("n_test must be at least 1".into());
        }
        if self.repetitions < 1 {
            return bad("repetitions must be at least 1".into());
        }
        if self.design_multiplier < 1 {
            return bad("design_multiplier must be at least 1".into());
        }
        if self.master_seed > i64::MAX as u64 {
            return bad(format!("master_seed {} exceeds {}, the largest TOML integer", self.master_seed, i64::MAX));
        }
        if self.mcmc_draws < 100 {
            return bad("mcmc_draws must be at least 100".into());
        }
        if self.levels.is_empty() {
            return bad("no levels listed".into());
        }
        if let Some(l) = self.levels.iter().find(|l| !(**l > 0.0 && **l < 1.0)) {
            return bad(format!("level {l} outside (0, 1)"));
        }
        if self.methods.is_empty() {
            return bad("no methods listed".into());
        }
        let mut seen = std::collections::HashSet::new();
        for m in &self.methods {
            m.validate()?;
            if !seen.insert(m.label()) {
                return bad(format!("duplicate method label `{}`", m.label()));
            }
        }
        Ok(())
    }
}

/// Outcome of one method on one repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub function: String,
    pub method: String,
    pub repetition: usize,
    /// Design seed of the repetition.
    pub seed: u64,
    pub outcome: std::result::Result<RunMetrics, String>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub report: MetricsReport,
    /// Mean over test points of the width ratio to the plain GP interval,
    /// one entry per level; NaN when no point has a finite ratio.
    pub relative_width: Vec<f64>,
    /// Counts of PIT values in `PIT_BINS` equal bins; empty for interval-only methods.
    pub pit_histogram: Vec<u64>,
    pub selected: Option<GnParams>,
}

/// Per-(function, method, level) summary across repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageAggregate {
    pub function: String,
    pub method: String,
    pub level: f64,
    pub mean_coverage: f64,
    pub q05: f64,
    pub q95: f64,
    pub mean_rel_width: f64,
    pub infinite_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub q05: f64,
    pub q95: f64,
}

/// Per-(function, method) score summary across successful repetitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreAggregate {
    pub function: String,
    pub method: String,
    pub runs: usize,
    pub failures: usize,
    pub ks_pit: Option<Summary>,
    pub var_pit: Option<Summary>,
    pub iae: Option<Summary>,
    pub rmse: Option<Summary>,
    pub crps: Option<Summary>,
    pub scrps: Option<Summary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub records: Vec<RunRecord>,
    pub coverage: Vec<CoverageAggregate>,
    pub scores: Vec<ScoreAggregate>,
}

/// Linear-interpolation sample quantile; NaN for an empty sample.
pub fn sample_quantile(values: &[f64], q: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let h = q * (v.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    v[lo] + (h - lo as f64) * (v[hi] - v[lo])
}

fn summarize(values: &[f64]) -> Option<Summary> {
    if values.is_empty() {
        return None;
    }
    Some(Summary {
        mean: values.iter().sum::<f64>() / values.len() as f64,
        q05: sample_quantile(values, 0.05),
        q95: sample_quantile(values, 0.95),
    })
}

/// Hyperparameter selection on a `split` fraction of the design (or all of
/// it), conditioning on the complement (or all of it).
fn build_gp(config: &ExperimentConfig, func: &str, rep: u64, data: &Dataset, split: Option<f64>) -> Result<FittedGp> {
    let fit_seed = derive_seed(config.master_seed, func, rep, Role::MlFit);
    match split {
        None => {
            let fit = fit_ml(data, config.regularity, fit_seed)?;
            FittedGp::new(data.clone(), fit.params)
        }
        Some(gamma) => {
            let n = data.len();
            if n < 4 {
                return Err(Error::InvalidDataset(format!("split needs at least 4 points, got {n}")));
            }
            let k = ((gamma * n as f64).round() as usize).clamp(2, n - 2);
            let mut idx: Vec<usize> = (0..n).collect();
            idx.shuffle(&mut stream(config.master_seed, func, rep, Role::Split));
            let (select, predict) = data.split(&idx[..k])?;
            let fit = fit_ml(&select, config.regularity, fit_seed)?;
            FittedGp::new(predict, fit.params)
        }
    }
}

/// Shared state of one repetition: one GP per split value and one residual
/// posterior per GP.
struct RunContext<'a> {
    config: &'a ExperimentConfig,
    func: &'a str,
    rep: u64,
    data: Dataset,
    gps: BTreeMap<Option<u64>, std::result::Result<FittedGp, String>>,
    posteriors: BTreeMap<Option<u64>, std::result::Result<GnPosterior, String>>,
}

impl RunContext<'_> {
    fn gp(&mut self, split: Option<f64>) -> Result<&FittedGp> {
        let key = split.map(f64::to_bits);
        if !self.gps.contains_key(&key) {
            let gp = build_gp(self.config, self.func, self.rep, &self.data, split).map_err(|e| e.to_string());
            self.gps.insert(key, gp);
        }
        self.gps[&key].as_ref().map_err(|e| Error::InvalidParameter(e.clone()))
    }

    fn posterior(&mut self, split: Option<f64>) -> Result<GnPosterior> {
        let key = split.map(f64::to_bits);
        if !self.posteriors.contains_key(&key) {
            let seed = derive_seed(self.config.master_seed, self.func, self.rep, Role::Mcmc);
            let draws = self.config.mcmc_draws;
            let post = self
                .gp(split)
                .and_then(|gp| gp.loo_residuals())
                .and_then(|r| posterior_sample(&r, DEFAULT_BOUNDS, draws, seed))
                .map_err(|e| e.to_string());
            self.posteriors.insert(key, post);
        }
        self.posteriors[&key].clone().map_err(Error::InvalidParameter)
    }
}

fn gaussian(mean: f64, sd: f64) -> Predictive {
    if sd > 0.0 {
        Predictive::Gaussian { mean, sd }
    } else {
        Predictive::Dirac(mean)
    }
}

fn pit_histogram(report_pits: &[f64]) -> Vec<u64> {
    let mut h = vec![0u64; PIT_BINS];
    for &u in report_pits {
        let b = ((u * PIT_BINS as f64) as usize).min(PIT_BINS - 1);
        h[b] += 1;
    }
    h
}

fn relative_widths(ints: &[PredictionInterval], reference: &[PredictionInterval]) -> f64 {
    let ratios: Vec<f64> = ints
        .iter()
        .zip(reference)
        .filter(|(i, r)| i.is_finite() && r.is_finite() && r.width() > 0.0)
        .map(|(i, r)| i.width() / r.width())
        .collect();
    if ratios.is_empty() {
        f64::NAN
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    }
}

struct TestSet {
    points: Vec<Vec<f64>>,
    truths: Vec<f64>,
    taus: Vec<f64>,
    /// Plain GP intervals per level, the width reference.
    reference: Vec<Vec<PredictionInterval>>,
}

fn evaluate_method(ctx: &mut RunContext, spec: &MethodSpec, test: &TestSet) -> Result<RunMetrics> {
    let config = ctx.config;
    let levels = &config.levels;
    let pit_seed = derive_seed(config.master_seed, &format!("{}/{}", ctx.func, spec.label()), ctx.rep, Role::Tau);
    let mut selected = None;
    let predictives: Option<Vec<Predictive>> = match spec.method {
        MethodName::JackknifePlusGp => None,
        MethodName::Gp => {
            let gp = ctx.gp(spec.split)?;
            Some(test.points.iter().map(|x| gp.posterior(x).map(|p| gaussian(p.mean, p.sd))).collect::<Result<_>>()?)
        }
        MethodName::CpsGp => {
            let gp = ctx.gp(spec.split)?;
            let taus = test.taus.iter().map(|&t| spec.tau.unwrap_or(t));
            Some(test.points.iter().zip(taus).map(|(x, t)| cps_predictive(gp, x, t)).collect::<Result<_>>()?)
        }
        MethodName::BcrGp => {
            let post = ctx.posterior(spec.split)?;
            let theta = match spec.rule.unwrap_or_default() {
                Rule::Variance => select_rule1(&post, spec.delta())?,
                Rule::KsPit => select_rule2(&post, spec.delta())?,
            };
            selected = Some(theta);
            let gp = ctx.gp(spec.split)?;
            Some(
                test.points
                    .iter()
                    .map(|x| crate::bcr::bcr_predictive(gp, x, theta).map(|b| b.to_predictive()))
                    .collect::<Result<_>>()?,
            )
        }
    };
    let gp = ctx.gp(spec.split)?;
    let means: Vec<f64> = test.points.iter().map(|x| gp.posterior(x).map(|p| p.mean)).collect::<Result<_>>()?;

    let (report, per_level, pit_histogram) = match predictives {
        Some(preds) => {
            let report = MetricsReport::from_predictives(&preds, &test.truths, &means, levels, pit_seed)?;
            let per_level = levels.iter().map(|&l| crate::metrics::intervals(&preds, l)).collect::<Result<Vec<_>>>()?;
            let pits = crate::metrics::pit_values(&preds, &test.truths, pit_seed)?;
            (report, per_level, pit_histogram(&pits.values))
        }
        None => {
            let mode = spec.radius.unwrap_or_default();
            let mut per_level = vec![Vec::with_capacity(test.points.len()); levels.len()];
            for x in &test.points {
                for (k, int) in jackknife_plus_intervals(gp, x, levels, mode)?.into_iter().enumerate() {
                    per_level[k].push(int);
                }
            }
            let report = MetricsReport::from_intervals(&per_level, &test.truths, &means, levels)?;
            (report, per_level, Vec::new())
        }
    };
    let relative_width = per_level.iter().zip(&test.reference).map(|(i, r)| relative_widths(i, r)).collect();
    Ok(RunMetrics { report, relative_width, pit_histogram, selected })
}

/// All methods of one (function, repetition) task.
fn run_task(config: &ExperimentConfig, func: &str, rep: usize) -> Vec<RunRecord> {
    let r = rep as u64;
    let seed = derive_seed(config.master_seed, func, r, Role::Design);
    let fail_all = |msg: String| {
        config
            .methods
            .iter()
            .map(|m| RunRecord {
                function: func.to_string(),
                method: m.label(),
                repetition: rep,
                seed,
                outcome: Err(msg.clone()),
                wall_time_s: 0.0,
            })
            .collect()
    };
    let setup = || -> Result<(Dataset, TestSet, FittedGp)> {
        let tf = TestFunction::by_name(func)?;
        let n = config.design_multiplier * tf.dim();
        let design = sample_design(&tf.domain, n, &mut stream(config.master_seed, func, r, Role::Design));
        let responses = design.iter().map(|x| tf.eval(x)).collect::<Result<Vec<_>>>()?;
        let data = Dataset::new(design, responses, tf.domain.clone())?;
        let points = sample_design(&tf.domain, config.effective_n_test(), &mut stream(config.master_seed, func, r, Role::TestDesign));
        let truths = points.iter().map(|x| tf.eval(x)).collect::<Result<Vec<_>>>()?;
        let mut tau_rng = stream(config.master_seed, func, r, Role::Tau);
        let taus = (0..points.len()).map(|_| tau_rng.gen::<f64>()).collect();
        let full = build_gp(config, func, r, &data, None)?;
        let gauss: Vec<Predictive> =
            points.iter().map(|x| full.posterior(x).map(|p| gaussian(p.mean, p.sd))).collect::<Result<_>>()?;
        let reference = config.levels.iter().map(|&l| crate::metrics::intervals(&gauss, l)).collect::<Result<_>>()?;
        Ok((data, TestSet { points, truths, taus, reference }, full))
    };
    let (data, test, full) = match setup() {
        Ok(v) => v,
        Err(e) => return fail_all(e.to_string()),
    };
    let mut ctx = RunContext { config, func, rep: r, data, gps: BTreeMap::new(), posteriors: BTreeMap::new() };
    ctx.gps.insert(None, Ok(full));
    config
        .methods
        .iter()
        .map(|spec| {
            let start = Instant::now();
            let outcome = evaluate_method(&mut ctx, spec, &test).map_err(|e| e.to_string());
            if let Err(e) = &outcome {
                log::warn!("{func} rep {rep} {}: {e}", spec.label());
            }
            RunRecord {
                function: func.to_string(),
                method: spec.label(),
                repetition: rep,
                seed,
                outcome,
                wall_time_s: start.elapsed().as_secs_f64(),
            }
        })
        .collect()
}

/// Runs every (function, repetition) task in parallel on the current rayon
/// pool and aggregates the records. Per-run failures are recorded, not raised.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutput> {
    config.validate()?;
    let tasks: Vec<(&str, usize)> = config
        .functions
        .iter()
        .flat_map(|f| (0..config.effective_repetitions()).map(move |r| (f.as_str(), r)))
        .collect();
    let records: Vec<RunRecord> = tasks
        .par_iter()
        .flat_map_iter(|&(f, r)| {
            let recs = run_task(config, f, r);
            let failed = recs.iter().filter(|x| x.outcome.is_err()).count();
            log::info!("{f} repetition {r}: {} methods, {failed} failed", recs.len());
            recs
        })
        .collect();
    let (coverage, scores) = aggregate(config, &records);
    Ok(ExperimentOutput { records, coverage, scores })
}

/// Reduces run records to coverage and score tables, in config order.
pub fn aggregate(config: &ExperimentConfig, records: &[RunRecord]) -> (Vec<CoverageAggregate>, Vec<ScoreAggregate>) {
    let mut coverage = Vec::new();
    let mut scores = Vec::new();
    for func in &config.functions {
        for spec in &config.methods {
            let label = spec.label();
            let runs: Vec<&RunRecord> = records.iter().filter(|r| &r.function == func && r.method == label).collect();
            let ok: Vec<&RunMetrics> = runs.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
            for (k, &level) in config.levels.iter().enumerate() {
                let covs: Vec<f64> = ok.iter().map(|m| m.report.coverage[k].coverage).collect();
                let widths: Vec<f64> = ok.iter().map(|m| m.relative_width[k]).filter(|w| w.is_finite()).collect();
                coverage.push(CoverageAggregate {
                    function: func.clone(),
                    method: label.clone(),
                    level,
                    mean_coverage: summarize(&covs).map_or(f64::NAN, |s| s.mean),
                    q05: sample_quantile(&covs, 0.05),
                    q95: sample_quantile(&covs, 0.95),
                    mean_rel_width: summarize(&widths).map_or(f64::NAN, |s| s.mean),
                    infinite_count: ok.iter().map(|m| m.report.coverage[k].infinite_count).sum(),
                });
            }
            let pick = |f: &dyn Fn(&MetricsReport) -> Option<f64>| -> Option<Summary> {
                summarize(&ok.iter().filter_map(|m| f(&m.report)).collect::<Vec<_>>())
            };
            scores.push(ScoreAggregate {
                function: func.clone(),
                method: label,
                runs: ok.len(),
                failures: runs.len() - ok.len(),
                ks_pit: pick(&|r| r.ks_pit),
                var_pit: pick(&|r| r.var_pit),
                iae: pick(&|r| r.iae),
                rmse: pick(&|r| Some(r.rmse)),
                crps: pick(&|r| r.crps),
                scrps: pick(&|r| r.scrps),
            });
        }
    }
    (coverage, scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn smoke(methods: Vec<MethodSpec>) -> ExperimentConfig {
        ExperimentConfig {
            n_test: 200,
            repetitions: 1,
            design_multiplier: 10,
            mcmc_draws: 300,
            methods,
            ..ExperimentConfig::new(vec!["branin".into()])
        }
    }

    #[test]
    fn default_config_round_trips() {
        let mut cfg = ExperimentConfig::new(vec!["goldstein_price".into(), "hartmann3".into()]);
        cfg.methods.push(MethodSpec { tau: Some(0.5), split: Some(0.2), ..MethodSpec::plain(MethodName::CpsGp) });
        cfg.methods.push(MethodSpec { radius: Some(RadiusMode::Raw), ..MethodSpec::plain(MethodName::JackknifePlusGp) });
        let text = cfg.to_toml().unwrap();
        assert_eq!(ExperimentConfig::from_toml(&text).unwrap(), cfg);
    }

    #[test]
    fn labels() {
        let labels: Vec<String> = default_methods().iter().map(MethodSpec::label).collect();
        assert_eq!(labels, ["gp", "cps-gp", "bcr-gp(0.1)", "bcr-gp(0.01)", "bcr-gp(ks-pit)", "j+gp"]);
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(ExperimentConfig::from_toml("functions = []").is_err());
        assert!(ExperimentConfig::from_toml("functions = [\"nope\"]").is_err());
        assert!(ExperimentConfig::from_toml("functions = [\"branin\"]\nlevels = [1.0]").is_err());
        assert!(ExperimentConfig::from_toml("functions = [\"branin\"]\nbogus = 1").is_err());
        let dup = "functions = [\"branin\"]\n[[methods]]\nmethod = \"gp\"\n[[methods]]\nmethod = \"gp\"\n";
        assert!(ExperimentConfig::from_toml(dup).is_err());
        let misplaced = "functions = [\"branin\"]\n[[methods]]\nmethod = \"gp\"\ndelta = 0.1\n";
        assert!(ExperimentConfig::from_toml(misplaced).is_err());
        let mut ok = ExperimentConfig::from_toml("functions = [\"branin\"]").unwrap();
        ok.master_seed = u64::MAX;
        assert!(ok.validate().is_err());
        ok.master_seed = 0;
        assert_eq!((ok.repetitions, ok.n_test, ok.regularity), (20, 2000, 2));
    }

    #[test]
    fn smoke_run_plain_gp() {
        let cfg = smoke(vec![MethodSpec::plain(MethodName::Gp)]);
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.records.len(), 1);
        let m = out.records[0].outcome.as_ref().unwrap();
        assert_eq!(m.report.coverage.len(), 3);
        assert!(m.relative_width.iter().all(|&w| w == 1.0));
        assert_eq!(m.pit_histogram.iter().sum::<u64>(), 200);
        assert_eq!(out.coverage.len(), 3);
        assert!(out.coverage.iter().all(|c| c.mean_rel_width == 1.0));
    }

    #[test]
    fn all_methods_and_determinism() {
        let mut methods = default_methods();
        methods.push(MethodSpec { split: Some(0.5), ..MethodSpec::plain(MethodName::CpsGp) });
        let cfg = smoke(methods);
        let a = run_experiment(&cfg).unwrap();
        for r in &a.records {
            assert!(r.outcome.is_ok(), "{} {:?}", r.method, r.outcome);
        }
        let b = run_experiment(&cfg).unwrap();
        // Debug output keeps NaN widths comparable
        assert_eq!(format!("{:?}{:?}", a.coverage, a.scores), format!("{:?}{:?}", b.coverage, b.scores));
        let j = a.scores.iter().find(|s| s.method == "j+gp").unwrap();
        assert!(j.ks_pit.is_none() && j.rmse.is_some());
    }

    #[test]
    fn adding_a_method_keeps_other_draws() {
        let a = run_experiment(&smoke(vec![MethodSpec::plain(MethodName::CpsGp)])).unwrap();
        let b = run_experiment(&smoke(vec![MethodSpec::plain(MethodName::Gp), MethodSpec::plain(MethodName::CpsGp)])).unwrap();
        let cps = |o: &ExperimentOutput| o.records.iter().find(|r| r.method == "cps-gp").unwrap().outcome.clone().unwrap().report;
        assert_eq!(cps(&a), cps(&b));
    }

    #[test]
    fn failures_are_recorded() {
        let mut cfg = smoke(vec![MethodSpec::plain(MethodName::Gp)]);
        cfg.design_multiplier = 1;
        cfg.functions = vec!["branin".into()];
        // two points: the split GP keeps too few rows
        cfg.methods.push(MethodSpec { split: Some(0.5), ..MethodSpec::plain(MethodName::CpsGp) });
        let out = run_experiment(&cfg).unwrap();
        assert_eq!(out.records.len(), 2);
        assert!(out.records.iter().any(|r| r.outcome.is_err()));
        assert_eq!(out.scores.iter().map(|s| s.failures).sum::<usize>(), 1);
    }

    #[test]
    fn quantile_convention() {
        assert_eq!(sample_quantile(&[3.0, 1.0, 2.0], 0.5), 2.0);
        assert_eq!(sample_quantile(&[0.0, 10.0], 0.05), 0.5);
        assert!(sample_quantile(&[], 0.5).is_nan());
    }
}
