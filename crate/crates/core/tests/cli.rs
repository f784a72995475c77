//! The command-line binary: outputs, determinism and exit codes.

use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_convex-relu")).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn generation_and_bounds_are_reproducible() {
    let gen = ["gen", "--n", "12", "--d", "3", "--seed", "5"];
    assert_eq!(stdout(&gen), stdout(&gen));
    let bounds = ["bounds", "--n", "10", "--d", "3", "--seed", "5"];
    let first = stdout(&bounds);
    assert_eq!(first, stdout(&bounds));
    let json: serde_json::Value = serde_json::from_str(&first).unwrap();
    assert_eq!(json["n"], 10);
    assert!(json["sample_thresholds"].is_object());
}

#[test]
fn files_round_trip_through_the_commands() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.txt");
    let patterns = dir.path().join("patterns.txt");
    let data_s = data.to_str().unwrap();
    let patterns_s = patterns.to_str().unwrap();
    stdout(&["gen", "--n", "8", "--d", "2", "--seed", "3", "--out", data_s]);
    stdout(&["sample", "--data", data_s, "--mode", "enumerated", "--out", patterns_s]);
    let solved: serde_json::Value =
        serde_json::from_str(&stdout(&["solve-gated", "--data", data_s, "--patterns", patterns_s])).unwrap();
    assert_eq!(solved["solution"]["certified"], true);
    let cone: serde_json::Value =
        serde_json::from_str(&stdout(&["solve-cone", "--data", data_s, "--patterns", patterns_s])).unwrap();
    let (cone, gated) = (&cone["solution"]["objective"], &solved["solution"]["objective"]);
    assert!(cone.as_f64().unwrap() >= gated.as_f64().unwrap() - 1e-6);
}

#[test]
fn config_file_mirrors_the_experiment_config() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("config.json");
    std::fs::write(&path, r#"{"seed": 9, "dataset": {"n": 6, "d": 2, "beta": 0.1}}"#).unwrap();
    let from_file = stdout(&["gen", "--config", path.to_str().unwrap()]);
    assert_eq!(from_file, stdout(&["gen", "--n", "6", "--d", "2", "--seed", "9"]));
    assert!(from_file.lines().count() >= 6);
}

#[test]
fn drift_curve_rises_and_stays_below_one_half() {
    let csv = stdout(&["drift", "--n", "100", "--d", "20", "--m", "50", "--steps", "300", "--seed", "2"]);
    let drift: Vec<f64> = csv.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(drift.len(), 301);
    assert_eq!(drift[0], 0.0);
    assert!(drift[300] > drift[10]);
    assert!(drift.iter().all(|&v| v < 0.5));
}

#[test]
fn exit_codes_distinguish_failures() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"seed": 1, "no_such_key": 3}"#).unwrap();
    assert_eq!(run(&["gen", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(run(&["gen", "--n", "0"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--only", "12"]).status.code(), Some(2));
    let starved = run(&["solve-gated", "--n", "10", "--d", "3", "--count", "5", "--max-iters", "1"]);
    assert_eq!(starved.status.code(), Some(3));
    assert_eq!(run(&["verify", "--quick", "--only", "2,9"]).status.code(), Some(0));
}
