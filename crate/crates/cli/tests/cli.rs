use std::path::Path;
use std::process::{Command, Output};

fn fluidpoll(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fluidpoll"))
        .args(args)
        .env_remove("FLUIDPOLL_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

#[test]
fn stability_exit_codes() {
    assert_eq!(code(&fluidpoll(&["stability", "--rho", "0.4", "--mu", "1", "--c", "0.1"])), 0);
    assert_eq!(code(&fluidpoll(&["stability", "--rho", "0.6", "--mu", "1", "--c", "0.1"])), 1);
    let missing = fluidpoll(&["stability", "--mu", "1"]);
    assert_eq!(code(&missing), 2);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("Usage"));
}

#[test]
fn malformed_input_never_panics() {
    for args in [
        vec!["stability", "--lambda", "-1", "--mu", "1", "--c", "0.1"],
        vec!["stability", "--lambda", "nan", "--mu", "1", "--c", "0.1"],
        vec!["marginal-lst", "--rho", "0.3", "--mu", "1", "--c", "0.1", "--queue", "3"],
        vec!["marginal-lst", "--rho", "0.7", "--mu", "1", "--c", "0.1"],
        vec!["ht-lst", "--mu", "1", "--c", "0.1", "--grid", "-5:0:3"],
        vec!["ht-density", "--mu", "0", "--c", "0.1"],
        vec!["simulate", "--rho", "0.3", "--mu", "1", "--c", "0.1", "--batches", "1"],
        vec!["rbm", "--theta1", "1", "--dt", "0"],
        vec!["prelimit", "--theta", "-1"],
        vec!["verify-table1", "--batches", "1"],
        vec!["verify-ecdf", "--total-time", "10", "--warmup", "100"],
        vec!["verify-commute", "--theta1", "1", "--theta2", "2"],
        vec!["--threads", "0", "ht-moments", "--mu", "1", "--c", "0.1"],
    ] {
        let o = fluidpoll(&args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!String::from_utf8_lossy(&o.stderr).contains("panicked"));
    }
}

#[test]
fn commute_check_passes() {
    let o = fluidpoll(&["verify-commute"]);
    assert_eq!(code(&o), 0);
    let o = fluidpoll(&["verify-commute", "--mu", "2", "--c", "0.3"]);
    assert_eq!(code(&o), 0);
    let csv = String::from_utf8(o.stdout).unwrap();
    assert!(csv.starts_with("# verify-commute"));
}

#[test]
fn json_documents_are_versioned() {
    let o = fluidpoll(&["--format", "json", "ht-moments", "--mu", "1", "--c", "0.1"]);
    assert_eq!(code(&o), 0);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["kind"], "ht_moments");
    let corr = v["payload"]["correlation"].as_f64().unwrap();
    assert!((corr + 0.4203).abs() < 1e-4);
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical() {
    let runs: Vec<_> = (0..2)
        .map(|_| {
            let dir = tempfile::tempdir().unwrap();
            let out = dir.path().to_str().unwrap().to_owned();
            let args = [
                "--out", &out, "simulate", "--rho", "0.45", "--mu", "1", "--c", "0.1", "--total-time", "2e5",
                "--warmup", "1e3", "--ecdf-points", "50", "--seed", "9",
            ];
            assert_eq!(code(&fluidpoll(&args)), 0);
            let args = ["--out", &out, "--format", "json", "rbm", "--theta1", "1", "--horizon", "200", "--seed", "4"];
            assert_eq!(code(&fluidpoll(&args)), 0);
            let args = ["--out", &out, "prelimit", "--n", "100", "--horizon", "40", "--path-points", "10"];
            assert_eq!(code(&fluidpoll(&args)), 0);
            read_dir_sorted(dir.path())
        })
        .collect();
    let names: Vec<&str> = runs[0].iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(names, ["prelimit.csv", "prelimit_path.csv", "rbm.json", "simulate.csv", "simulate_ecdf.csv"]);
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_fluidpoll"))
        .args(["ht-density", "--mu", "1", "--c", "0.1", "--grid", "1:10:4"])
        .env("FLUIDPOLL_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(dir.path().join("ht_density.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# ht-density"));
    assert_eq!(lines[1], "x,density");
    assert_eq!(lines.len(), 6);
}

#[test]
fn ecdf_check_reports_failure_on_tiny_budget() {
    let o = fluidpoll(&["verify-ecdf", "--total-time", "2e5", "--warmup", "1e3", "--threshold", "1e-6"]);
    assert_eq!(code(&o), 1);
}
