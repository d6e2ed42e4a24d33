use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand, ValueEnum};

use gpcal::bcr::{posterior_sample, select_rule1, select_rule2, DEFAULT_BOUNDS, DEFAULT_DELTA, DEFAULT_DRAWS};
use gpcal::cps::cps_predictive;
use gpcal::experiment::{run_experiment, ExperimentConfig};
use gpcal::gn::GnParams;
use gpcal::gp::fit_ml;
use gpcal::report::{summary_table, write_atomic, write_bundle};
use gpcal::{Dataset, FittedGp, Predictive};

/// Environment variable holding the worker count for `run`.
const WORKERS_ENV: &str = "GPCAL_WORKERS";

#[derive(Parser)]
#[command(name = "gpcal", version, about = "Calibrated predictive distributions for GP interpolation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a benchmark sweep and write the output bundle.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `master_seed`.
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides `repetitions`.
        #[arg(long)]
        reps: Option<usize>,
        /// 100 repetitions and 4000 test points.
        #[arg(long)]
        full_scale: bool,
    },
    /// Write a `(z, F(z))` trace of one predictive CDF.
    Cdf {
        /// CSV with a header line, `d` coordinate columns and one response column.
        #[arg(long)]
        data: PathBuf,
        #[arg(long, value_enum)]
        method: Method,
        /// Comma-separated coordinates of the test point.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        x: Vec<f64>,
        /// Tie-breaker of the stepwise CPD.
        #[arg(long, default_value_t = 0.5)]
        tau: f64,
        #[arg(long)]
        out: PathBuf,
        /// Seed of the likelihood restarts and of the residual sampler.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 2)]
        regularity: u32,
        /// Grid size of smooth traces.
        #[arg(long, default_value_t = 401)]
        points: usize,
        /// Residual law `β,λ` for bcr-gp; sampled and selected when absent.
        #[arg(long, value_delimiter = ',')]
        theta: Option<Vec<f64>>,
        #[arg(long, value_enum, default_value_t = RuleArg::Variance)]
        rule: RuleArg,
        #[arg(long, default_value_t = DEFAULT_DELTA)]
        delta: f64,
    },
    /// Run the oracle checks; exit status 0 iff all pass.
    Selftest {
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Gp,
    CpsGp,
    BcrGp,
}

#[derive(Clone, Copy, ValueEnum)]
enum RuleArg {
    Variance,
    KsPit,
}

/// Failure with a chosen exit status.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Self { code: 1, error: e.into() }
    }
}

fn usage(error: anyhow::Error) -> Failure {
    Failure { code: 2, error }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out, seed, reps, full_scale } => cmd_run(&config, &out, seed, reps, full_scale),
        Command::Cdf { data, method, x, tau, out, seed, regularity, points, theta, rule, delta } => {
            cmd_cdf(&CdfArgs { data, method, x, tau, out, seed, regularity, points, theta, rule, delta })
        }
        Command::Selftest { seed } => cmd_selftest(seed),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn configure_workers() -> Result<(), Failure> {
    let Ok(v) = std::env::var(WORKERS_ENV) else { return Ok(()) };
    let n: usize = v.trim().parse().map_err(|_| usage(anyhow::anyhow!("{WORKERS_ENV}={v} is not a worker count")))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    Ok(())
}

fn cmd_run(config: &Path, out: &Path, seed: Option<u64>, reps: Option<usize>, full_scale: bool) -> Result<ExitCode, Failure> {
    if !config.exists() {
        return Err(usage(anyhow::anyhow!("config file not found: {}", config.display())));
    }
    let text = std::fs::read_to_string(config).with_context(|| format!("reading {}", config.display()))?;
    let mut cfg = ExperimentConfig::from_toml(&text).map_err(|e| usage(anyhow::anyhow!("{}: {e}", config.display())))?;
    if let Some(s) = seed {
        cfg.master_seed = s;
    }
    if let Some(r) = reps {
        cfg.repetitions = r;
    }
    cfg.full_scale |= full_scale;
    cfg.validate().map_err(|e| usage(e.into()))?;
    configure_workers()?;

    let output = run_experiment(&cfg)?;
    let files = write_bundle(out, &cfg, &output).with_context(|| format!("writing to {}", out.display()))?;
    print!("{}", summary_table(&output));
    let failed = output.records.iter().filter(|r| r.outcome.is_err()).count();
    if failed > 0 {
        eprintln!("warning: {failed} of {} runs failed; see runs.csv", output.records.len());
    }
    for f in files {
        println!("wrote {}", f.display());
    }
    Ok(ExitCode::SUCCESS)
}

struct CdfArgs {
    data: PathBuf,
    method: Method,
    x: Vec<f64>,
    tau: f64,
    out: PathBuf,
    seed: u64,
    regularity: u32,
    points: usize,
    theta: Option<Vec<f64>>,
    rule: RuleArg,
    delta: f64,
}

fn read_dataset(path: &Path) -> anyhow::Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_path(path).with_context(|| format!("reading {}", path.display()))?;
    let mut points = Vec::new();
    let mut responses = Vec::new();
    for (k, row) in reader.records().enumerate() {
        let row = row?;
        let values: Vec<f64> = row
            .iter()
            .map(|s| s.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .with_context(|| format!("{} row {}: not a number", path.display(), k + 2))?;
        if values.len() < 2 {
            bail!("{} row {}: need at least one coordinate and a response", path.display(), k + 2);
        }
        let (z, x) = values.split_last().expect("non-empty");
        points.push(x.to_vec());
        responses.push(*z);
    }
    Ok(Dataset::from_points(points, responses)?)
}

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// `(z, F(z))` rows; stepwise laws give both ends of every jump.
fn trace(p: &Predictive, grid: &[f64]) -> Vec<(f64, f64)> {
    match p {
        Predictive::Stepwise(f) => {
            let th = f.thresholds();
            let span = (th[th.len() - 1] - th[0]).max(1e-12);
            let mut rows = vec![(th[0] - 0.1 * span, f.left_limit(th[0]))];
            let mut last = f64::NAN;
            for &c in th {
                if c == last {
                    continue;
                }
                last = c;
                rows.push((c, f.left_limit(c)));
                rows.push((c, f.right_limit(c)));
            }
            rows.push((th[th.len() - 1] + 0.1 * span, f.right_limit(th[th.len() - 1])));
            rows
        }
        Predictive::Dirac(v) => vec![(*v, 0.0), (*v, 1.0)],
        _ => grid.iter().map(|&z| (z, p.cdf(z))).collect(),
    }
}

fn cmd_cdf(a: &CdfArgs) -> Result<ExitCode, Failure> {
    if !a.data.exists() {
        return Err(usage(anyhow::anyhow!("dataset file not found: {}", a.data.display())));
    }
    let data = read_dataset(&a.data).map_err(usage)?;
    if a.x.len() != data.dim() {
        return Err(usage(anyhow::anyhow!("--x has {} coordinates, the dataset has {}", a.x.len(), data.dim())));
    }
    if !(0.0..=1.0).contains(&a.tau) {
        return Err(usage(anyhow::anyhow!("--tau must lie in [0, 1]")));
    }
    if a.points < 2 {
        return Err(usage(anyhow::anyhow!("--points must be at least 2")));
    }
    let fit = fit_ml(&data, a.regularity, a.seed)?;
    let gp = FittedGp::new(data, fit.params)?;
    let post = gp.posterior(&a.x)?;
    let predictive = match a.method {
        Method::Gp if post.sd > 0.0 => Predictive::Gaussian { mean: post.mean, sd: post.sd },
        Method::Gp => Predictive::Dirac(post.mean),
        Method::CpsGp => cps_predictive(&gp, &a.x, a.tau)?,
        Method::BcrGp => {
            let theta = match &a.theta {
                Some(t) if t.len() == 2 => GnParams::new(t[0], t[1])?,
                Some(_) => return Err(usage(anyhow::anyhow!("--theta takes two values β,λ"))),
                None => {
                    let post = posterior_sample(&gp.loo_residuals()?, DEFAULT_BOUNDS, DEFAULT_DRAWS, a.seed)?;
                    match a.rule {
                        RuleArg::Variance => select_rule1(&post, a.delta)?,
                        RuleArg::KsPit => select_rule2(&post, a.delta)?,
                    }
                }
            };
            eprintln!("residual law: shape {} scale {}", theta.shape, theta.scale);
            gpcal::bcr::bcr_predictive(&gp, &a.x, theta)?.to_predictive()
        }
    };
    if let Predictive::Dirac(v) = predictive {
        eprintln!("x is a design point: the predictive law is a dirac at {v}");
    }
    let grid: Vec<f64> =
        (0..a.points).map(|k| post.mean + post.sd * (-5.0 + 10.0 * k as f64 / (a.points - 1) as f64)).collect();
    let mut text = String::from("z,cdf\n");
    for (z, f) in trace(&predictive, &grid) {
        text.push_str(&format!("{},{}\n", fmt(z), fmt(f)));
    }
    write_atomic(&a.out, text.as_bytes()).with_context(|| format!("writing {}", a.out.display()))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_selftest(seed: u64) -> Result<ExitCode, Failure> {
    let start = std::time::Instant::now();
    let results = gpcal::oracles::selftest_suite(seed);
    for r in &results {
        println!("{} {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
    }
    let ok = results.iter().all(|r| r.passed);
    println!("{} in {:.1} s", if ok { "all checks passed" } else { "self-test failed" }, start.elapsed().as_secs_f64());
    Ok(if ok { ExitCode::SUCCESS } else { ExitCode::from(1) })
}
