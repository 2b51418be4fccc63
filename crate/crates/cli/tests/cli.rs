use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fockbench(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fockbench")).args(args).output().expect("binary runs")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn list_suites_names_every_suite() {
    let out = fockbench(&["list-suites"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "basis-norms",
        "kernels-weyl",
        "toeplitz-assembly",
        "heat",
        "correspondence",
        "wiener",
        "trace-identity",
        "berger-coburn",
        "dilation",
        "limits",
        "spectrum",
        "compactness",
        "esscen",
        "full",
    ] {
        assert!(text.lines().any(|l| l == name), "{name} missing from:\n{text}");
    }
}

#[test]
fn run_writes_report_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = fockbench(&["run", "--suite", "kernels-weyl", "--seed", "3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("5 checks, 5 passed, 0 failed"));
    let r = report(dir.path());
    assert_eq!(r["schema"], "fockbench-report/1");
    assert_eq!(r["config"]["seed"], 3);
    assert_eq!(r["summary"]["all_passed"], true);
    let suite = &r["suites"][0];
    assert_eq!(suite["suite"], "kernels-weyl");
    for c in suite["checks"].as_array().unwrap() {
        assert!(!c["anchor"].as_str().unwrap().is_empty(), "check without anchor: {c}");
        assert!(c["passed"].is_boolean());
    }
    for table in suite["tables"].as_array().unwrap() {
        let csv = fs::read_to_string(dir.path().join(table.as_str().unwrap())).unwrap();
        assert!(csv.lines().count() > 1);
    }
    let keys: Vec<&String> = r["timestamp"].as_object().unwrap().keys().collect();
    assert_eq!(keys, ["elapsed_seconds", "started_unix", "suite_seconds"]);
}

#[test]
fn identical_runs_match_outside_the_timestamp() {
    // same output dir for both runs, since the config echo records it
    let dir = tempfile::tempdir().unwrap();
    let csv = "limits_directions.csv";
    let mut runs = Vec::new();
    for _ in 0..2 {
        let out = fockbench(&["run", "--suite", "limits", "--seed", "11", "--jobs", "1", "--out", dir.path().to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
        let mut r = report(dir.path());
        r.as_object_mut().unwrap().remove("timestamp");
        runs.push((r, fs::read(dir.path().join(csv)).unwrap()));
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn failed_checks_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = fockbench(&[
        "run",
        "--suite",
        "kernels-weyl",
        "--tolerance-scale",
        "1e-30",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stderr).unwrap().contains("FAIL kernels-weyl"));
    assert_eq!(report(dir.path())["summary"]["all_passed"], false);
}

#[test]
fn divergent_trace_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "version = 1\nsuite = \"trace-identity\"\n[trace]\ns_factors = [0.5]\n").unwrap();
    let out = fockbench(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8(out.stderr).unwrap().contains("diverges"));
    assert!(!dir.path().join("report.json").exists());
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let typo = dir.path().join("typo.toml");
    fs::write(&typo, "version = 1\nsuite = \"heat\"\n[fock]\ndegre = 10\n").unwrap();
    assert_eq!(fockbench(&["run", "--config", typo.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(fockbench(&["run", "--suite", "no-such-suite"]).status.code(), Some(1));
    assert_eq!(fockbench(&["run"]).status.code(), Some(1));
}
