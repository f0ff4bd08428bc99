use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hybrid-spares"))
}

fn baseline() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/baseline.toml")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn manifest(dir: &Path) -> Value {
    let text = std::fs::read_to_string(dir.join("manifest.json")).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn shipped_baseline_matches_library_default() {
    let text = std::fs::read_to_string(baseline()).unwrap();
    let cfg = hybrid_spares::ScenarioConfig::from_toml_str(&text).unwrap();
    assert_eq!(cfg, hybrid_spares::ScenarioConfig::baseline());
}

#[test]
fn help_lists_subcommands() {
    let out = run(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for cmd in ["analyze", "simulate", "validate", "optimize", "sweep"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn bad_config_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(baseline()).unwrap().replace("n_bar_sat = 40", "n_bar_sat = 0");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("out");
    let res = run(&["analyze", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2), "{}", String::from_utf8_lossy(&res.stderr));

    std::fs::write(&cfg, "[constellation\n").unwrap();
    let res = run(&["analyze", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));

    let missing = dir.path().join("missing.toml");
    let res = run(&["simulate", "--config", missing.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn analyze_baseline_writes_tables_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("analyze");
    let res = run(&["--jobs", "1", "analyze", "--config", baseline().to_str().unwrap(), "--out", out.to_str().unwrap(), "--approx"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    for f in ["metrics.json", "plane_distribution.csv", "parking_distribution.csv", "availability.csv", "demand.csv", "cycle_profile.csv"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let m = manifest(&out);
    assert_eq!(m["command"], "analyze");
    assert_eq!(m["exit_code"], 0);
    assert_eq!(m["parallel"], false);
    assert!(m["files"].as_array().unwrap().len() >= 6);

    let plane = std::fs::read_to_string(out.join("plane_distribution.csv")).unwrap();
    let mut lines = plane.lines();
    assert!(lines.next().unwrap().starts_with("# schema=plane_distribution version="));
    assert_eq!(lines.next().unwrap(), "level,cycle_average,before_alignment,after_transfer");
    let total: f64 = lines.map(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9, "{total}");

    let metrics: Value = serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(metrics["model"], "reduced");
    assert!(metrics["metrics"]["costs"]["total"].as_f64().unwrap() > 0.0);
}

#[test]
fn simulate_is_reproducible_by_seed() {
    let dir = tempfile::tempdir().unwrap();
    let go = |name: &str, jobs: &str| {
        let out = dir.path().join(name);
        let res = run(&[
            "--jobs", jobs, "simulate", "--config", baseline().to_str().unwrap(), "--out", out.to_str().unwrap(),
            "--years", "1", "--burn-in", "0.5", "--reps", "3", "--seed", "7",
        ]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        std::fs::read_to_string(out.join("replications.csv")).unwrap()
    };
    let a = go("a", "1");
    let b = go("b", "2");
    assert_eq!(a, b);
    assert_eq!(a.lines().count(), 2 + 3);
    assert_eq!(manifest(&dir.path().join("a"))["seeds"][0], 7);
}

#[test]
fn optimize_small_run_reports_policy() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("opt");
    let res = run(&[
        "--jobs", "1", "optimize", "--config", baseline().to_str().unwrap(), "--out", out.to_str().unwrap(),
        "--strategy", "direct", "--seeds", "1", "--population", "8", "--generations", "2", "--no-polish",
    ]);
    let code = res.status.code().unwrap();
    assert!(code == 0 || code == 4, "{}", String::from_utf8_lossy(&res.stderr));
    assert!(out.join("optimization.json").exists());
    assert!(out.join("history.csv").exists());
    let best = std::fs::read_to_string(out.join("best_direct.toml")).unwrap();
    let cfg = hybrid_spares::ScenarioConfig::from_toml_str(&best).unwrap();
    assert_eq!(cfg.policy.r_ci, 0);
    assert_eq!(manifest(&out)["exit_code"], code);
}
