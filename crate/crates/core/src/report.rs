//! Output bundle: CSV tables at six significant digits and a JSON summary,
//! each written through a temporary file and a rename.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::experiment::{ExperimentConfig, ExperimentOutput, RunRecord, ScoreAggregate, Summary, PIT_BINS};

pub const COVERAGE_FILE: &str = "coverage.csv";
pub const SCORES_FILE: &str = "scores.csv";
pub const RUNS_FILE: &str = "runs.csv";
pub const PIT_FILE: &str = "pit_histogram.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const CONFIG_FILE: &str = "config.toml";

pub const COVERAGE_HEADER: [&str; 8] =
    ["function", "method", "level", "mean_coverage", "q05", "q95", "mean_rel_width", "infinite_count"];
pub const SCORES_HEADER: [&str; 22] = [
    "function", "method", "runs", "failures", "ks_pit", "ks_pit_q05", "ks_pit_q95", "var_pit", "var_pit_q05", "var_pit_q95", "iae",
    "iae_q05", "iae_q95", "rmse", "rmse_q05", "rmse_q95", "crps", "crps_q05", "crps_q95", "scrps", "scrps_q05", "scrps_q95",
];
pub const RUNS_HEADER: [&str; 17] = [
    "function", "method", "repetition", "seed", "status", "level", "coverage", "mean_width", "rel_width", "infinite_count",
    "ks_pit", "var_pit", "iae", "rmse", "crps", "scrps", "wall_time_s",
];
pub const PIT_HEADER: [&str; 6] = ["function", "method", "bin_lo", "bin_hi", "count", "density"];

/// Six significant digits, shortest round-trip form; `nan`, `inf`, `-inf`
/// for non-finite values.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.5e}").parse().expect("formatted float parses");
    let a = rounded.abs();
    if (1e-4..1e15).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, fmt_sig)
}

fn table(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 csv")
}

pub fn coverage_csv(out: &ExperimentOutput) -> String {
    table(
        &COVERAGE_HEADER,
        out.coverage.iter().map(|c| {
            vec![
                c.function.clone(),
                c.method.clone(),
                fmt_sig(c.level),
                fmt_sig(c.mean_coverage),
                fmt_sig(c.q05),
                fmt_sig(c.q95),
                fmt_sig(c.mean_rel_width),
                c.infinite_count.to_string(),
            ]
        }),
    )
}

fn summary_cells(s: Option<Summary>) -> [String; 3] {
    [opt(s.map(|v| v.mean)), opt(s.map(|v| v.q05)), opt(s.map(|v| v.q95))]
}

pub fn scores_csv(out: &ExperimentOutput) -> String {
    table(
        &SCORES_HEADER,
        out.scores.iter().map(|s: &ScoreAggregate| {
            let mut row = vec![s.function.clone(), s.method.clone(), s.runs.to_string(), s.failures.to_string()];
            for sum in [s.ks_pit, s.var_pit, s.iae, s.rmse, s.crps, s.scrps] {
                row.extend(summary_cells(sum));
            }
            row
        }),
    )
}

/// One row per (run, level); failed runs get one row with the error text.
pub fn runs_csv(records: &[RunRecord]) -> String {
    let mut rows = Vec::new();
    for r in records {
        let head = vec![r.function.clone(), r.method.clone(), r.repetition.to_string(), r.seed.to_string()];
        match &r.outcome {
            Err(e) => {
                let mut row = head;
                row.push(format!("error: {e}"));
                row.extend(std::iter::repeat_n(String::new(), 11));
                row.push(fmt_sig(r.wall_time_s));
                rows.push(row);
            }
            Ok(m) => {
                for (k, c) in m.report.coverage.iter().enumerate() {
                    let mut row = head.clone();
                    row.push("ok".into());
                    row.extend([
                        fmt_sig(c.level),
                        fmt_sig(c.coverage),
                        fmt_sig(c.mean_width),
                        fmt_sig(m.relative_width[k]),
                        c.infinite_count.to_string(),
                        opt(m.report.ks_pit),
                        opt(m.report.var_pit),
                        opt(m.report.iae),
                        fmt_sig(m.report.rmse),
                        opt(m.report.crps),
                        opt(m.report.scrps),
                        fmt_sig(r.wall_time_s),
                    ]);
                    rows.push(row);
                }
            }
        }
    }
    table(&RUNS_HEADER, rows)
}

/// PIT counts pooled over repetitions, per (function, method).
pub fn pit_histogram_csv(config: &ExperimentConfig, out: &ExperimentOutput) -> String {
    let mut rows = Vec::new();
    for func in &config.functions {
        for spec in &config.methods {
            let label = spec.label();
            let mut counts = [0u64; PIT_BINS];
            for r in out.records.iter().filter(|r| &r.function == func && r.method == label) {
                if let Ok(m) = &r.outcome {
                    for (c, h) in counts.iter_mut().zip(&m.pit_histogram) {
                        *c += h;
                    }
                }
            }
            let total: u64 = counts.iter().sum();
            if total == 0 {
                continue;
            }
            for (b, &c) in counts.iter().enumerate() {
                let w = 1.0 / PIT_BINS as f64;
                rows.push(vec![
                    func.clone(),
                    label.clone(),
                    fmt_sig(b as f64 * w),
                    fmt_sig((b + 1) as f64 * w),
                    c.to_string(),
                    fmt_sig(c as f64 / (total as f64 * w)),
                ]);
            }
        }
    }
    table(&PIT_HEADER, rows)
}

#[derive(Serialize)]
struct SummaryDoc<'a> {
    config: &'a ExperimentConfig,
    repetitions: usize,
    n_test: usize,
    coverage: &'a [crate::experiment::CoverageAggregate],
    scores: &'a [ScoreAggregate],
}

/// Aggregates and the resolved config; no timing, so reruns match byte for byte.
pub fn summary_json(config: &ExperimentConfig, out: &ExperimentOutput) -> String {
    let doc = SummaryDoc {
        config,
        repetitions: config.effective_repetitions(),
        n_test: config.effective_n_test(),
        coverage: &out.coverage,
        scores: &out.scores,
    };
    serde_json::to_string_pretty(&doc).expect("summary serializes")
}

/// Writes `bytes` to a sibling temporary file, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path.file_name().ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let tmp = dir.join(format!(".{}.tmp{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result
}

/// Writes the whole bundle into `dir`, creating it if needed.
pub fn write_bundle(dir: &Path, config: &ExperimentConfig, out: &ExperimentOutput) -> io::Result<Vec<PathBuf>> {
    fs::create_dir_all(dir)?;
    let config_text = config.to_toml().map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e.to_string()))?;
    let files = [
        (COVERAGE_FILE, coverage_csv(out)),
        (SCORES_FILE, scores_csv(out)),
        (RUNS_FILE, runs_csv(&out.records)),
        (PIT_FILE, pit_histogram_csv(config, out)),
        (SUMMARY_FILE, summary_json(config, out)),
        (CONFIG_FILE, config_text),
    ];
    let mut written = Vec::new();
    for (name, text) in files {
        let p = dir.join(name);
        write_atomic(&p, text.as_bytes())?;
        written.push(p);
    }
    Ok(written)
}

/// Plain-text coverage and score table for the terminal.
pub fn summary_table(out: &ExperimentOutput) -> String {
    let mut s = format!("{:<18} {:<22} {:>6} {:>9} {:>9} {:>5}\n", "function", "method", "level", "coverage", "rel_width", "inf");
    for c in &out.coverage {
        s.push_str(&format!(
            "{:<18} {:<22} {:>6} {:>9} {:>9} {:>5}\n",
            c.function,
            c.method,
            fmt_sig(c.level),
            fmt_sig(c.mean_coverage),
            fmt_sig(c.mean_rel_width),
            c.infinite_count
        ));
    }
    s.push_str(&format!("\n{:<18} {:<22} {:>5} {:>9} {:>9} {:>9}\n", "function", "method", "fail", "ks_pit", "scrps", "rmse"));
    for r in &out.scores {
        s.push_str(&format!(
            "{:<18} {:<22} {:>5} {:>9} {:>9} {:>9}\n",
            r.function,
            r.method,
            r.failures,
            opt(r.ks_pit.map(|v| v.mean)),
            opt(r.scrps.map(|v| v.mean)),
            opt(r.rmse.map(|v| v.mean)),
        ));
    }
    s
}
