use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const SMOKE: &str = r#"
functions = ["branin"]
n_test = 200
repetitions = 2
mcmc_draws = 300
design_multiplier = 10

[[methods]]
method = "gp"

[[methods]]
method = "cps-gp"

[[methods]]
method = "bcr-gp"
rule = "ks-pit"
"#;

const DATA: &str = "x,z\n0.1,0.5\n0.3,1.2\n0.5,0.7\n0.7,-0.2\n0.9,0.3\n";

fn gpcal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gpcal")).args(args).env("GPCAL_WORKERS", "2").output().expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_trace(p: &Path) -> Vec<(f64, f64)> {
    let text = fs::read_to_string(p).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("z,cdf"));
    lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect()
}

#[test]
fn missing_config_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = gpcal(&["run", "--config", s(&dir.path().join("nope.toml")), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("config file not found"));
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "functions = [\"branin\"]\nrepetitons = 3\n").unwrap();
    let out = gpcal(&["run", "--config", s(&cfg), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn smoke_run_writes_bundle_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("smoke.toml");
    fs::write(&cfg, SMOKE).unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for o in [&a, &b] {
        let out = gpcal(&["run", "--config", s(&cfg), "--out", s(o)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    for f in ["coverage.csv", "scores.csv", "runs.csv", "pit_histogram.csv", "summary.json", "config.toml"] {
        assert!(a.join(f).is_file(), "{f} missing");
    }
    let coverage = fs::read_to_string(a.join("coverage.csv")).unwrap();
    assert!(coverage.starts_with("function,method,level,mean_coverage,q05,q95,mean_rel_width,infinite_count\n"));
    // 3 methods x 3 default levels
    assert_eq!(coverage.lines().count(), 10);
    for f in ["coverage.csv", "scores.csv", "pit_histogram.csv", "summary.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn gp_trace_is_strictly_increasing() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    fs::write(&data, DATA).unwrap();
    let out_path = dir.path().join("g.csv");
    let out = gpcal(&["cdf", "--data", s(&data), "--method", "gp", "--x", "0.4", "--out", s(&out_path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let t = read_trace(&out_path);
    assert_eq!(t.len(), 401);
    assert!(t.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 > w[0].1));
}

#[test]
fn cps_trace_has_n_plus_one_levels() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    fs::write(&data, DATA).unwrap();
    let out_path = dir.path().join("c.csv");
    let out = gpcal(&["cdf", "--data", s(&data), "--method", "cps-gp", "--x", "0.4", "--tau", "0.5", "--out", s(&out_path)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut levels: Vec<f64> = read_trace(&out_path).into_iter().map(|r| r.1).collect();
    levels.dedup();
    let expected: Vec<f64> = (0..6).map(|i| (i as f64 + 0.5) / 6.0).collect();
    assert_eq!(levels.len(), 6);
    for (l, e) in levels.iter().zip(&expected) {
        assert!((l - e).abs() < 1e-12);
    }
}

#[test]
fn bcr_with_gaussian_residuals_matches_gp() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    fs::write(&data, DATA).unwrap();
    let (g, b) = (dir.path().join("g.csv"), dir.path().join("b.csv"));
    let theta = format!("2,{}", 2f64.sqrt());
    assert!(gpcal(&["cdf", "--data", s(&data), "--method", "gp", "--x", "0.4", "--out", s(&g)]).status.success());
    let out = gpcal(&["cdf", "--data", s(&data), "--method", "bcr-gp", "--x", "0.4", "--theta", &theta, "--out", s(&b)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for (p, q) in read_trace(&g).iter().zip(read_trace(&b)) {
        assert_eq!(p.0, q.0);
        assert!((p.1 - q.1).abs() < 1e-12);
    }
}

#[test]
fn design_point_gives_a_dirac() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    fs::write(&data, DATA).unwrap();
    let out_path = dir.path().join("p.csv");
    let out = gpcal(&["cdf", "--data", s(&data), "--method", "gp", "--x", "0.3", "--out", s(&out_path)]);
    assert!(out.status.success());
    let t = read_trace(&out_path);
    assert_eq!(t.len(), 2);
    assert_eq!((t[0].1, t[1].1), (0.0, 1.0));
    assert!((t[0].0 - 1.2).abs() < 1e-6);
}

#[test]
fn wrong_dimension_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    fs::write(&data, DATA).unwrap();
    let out = gpcal(&["cdf", "--data", s(&data), "--method", "gp", "--x", "0.4,0.5", "--out", s(&dir.path().join("o.csv"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn selftest_passes() {
    let out = gpcal(&["selftest"]);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{text}");
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5);
}

#[test]
fn shipped_configs_are_valid() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().is_some_and(|e| e == "toml") {
            let cfg = gpcal::experiment::ExperimentConfig::from_toml(&fs::read_to_string(&p).unwrap()).unwrap();
            cfg.validate().unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            seen += 1;
        }
    }
    assert!(seen >= 3);
}
