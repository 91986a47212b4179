use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sigeo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sigeo"))
        .args(args)
        .env_remove("SIGEO_SEED")
        .output()
        .expect("run sigeo")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn bernoulli_fisher_matrix_at_one_half() {
    let out = sigeo(&[
        "fisher-matrix",
        "--model",
        "bernoulli",
        "--theta",
        "0.5",
        "--no-timestamp",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["result"]["matrix"][0][0].as_f64().unwrap() - 4.0).abs() < 1e-12);
    assert_eq!(v["result"]["rank"], 1);
}

#[test]
fn bernoulli_distance_and_curve_export() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("curve.csv");
    let out = sigeo(&[
        "distance",
        "--model",
        "bernoulli",
        "--from",
        "0.25",
        "--to",
        "0.75",
        "--no-timestamp",
        "--emit-curve",
        curve.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let len = json(&out)["result"]["length"].as_f64().unwrap();
    assert!((len - 1.0471975511965976).abs() < 1e-6, "{len}");
    let text = std::fs::read_to_string(&curve).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t theta_1 speed"));
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split_whitespace().map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 201);
    assert!(rows.iter().all(|r| r.len() == 3));
}

#[test]
fn unknown_config_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"model": "bernoulli", "thetaa": 0.5}"#,
    );
    let out = sigeo(&["fisher-matrix", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("thetaa"));
}

#[test]
fn malformed_config_fails_with_usage_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "c.json", "{ not json");
    let out = sigeo(&["fisher-matrix", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    let cfg = write(dir.path(), "d.json", r#"{"nodes": "many"}"#);
    let out = sigeo(&["distance", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nodes"));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        r#"{"model": "categorical:3", "theta": [0.2, 0.3], "no-timestamp": true}"#,
    );
    let out = sigeo(&["fisher-matrix", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["result"]["matrix"].as_array().unwrap().len(), 2);
    assert!(v.get("timestamp_unix").is_none());
    let out = sigeo(&[
        "fisher-matrix",
        "--config",
        &cfg,
        "--model",
        "bernoulli",
        "--theta",
        "0.2",
    ]);
    let v = json(&out);
    assert!((v["result"]["matrix"][0][0].as_f64().unwrap() - 6.25).abs() < 1e-9);
}

#[test]
fn summaries_are_byte_identical_without_timestamp() {
    let args = [
        "dpi-sweep",
        "--draws",
        "40",
        "--seed",
        "9",
        "--no-timestamp",
    ];
    let a = sigeo(&args);
    let b = sigeo(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let with_ts = json(&sigeo(&["dpi-sweep", "--draws", "5"]));
    assert!(with_ts["timestamp_unix"].is_u64());
}

#[test]
fn seed_falls_back_to_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_sigeo"))
        .args(["dpi-sweep", "--draws", "3", "--no-timestamp"])
        .env("SIGEO_SEED", "77")
        .output()
        .unwrap();
    assert_eq!(json(&out)["seed"], 77);
    let out = Command::new(env!("CARGO_BIN_EXE_sigeo"))
        .args(["dpi-sweep", "--draws", "3", "--seed", "5", "--no-timestamp"])
        .env("SIGEO_SEED", "77")
        .output()
        .unwrap();
    assert_eq!(json(&out)["seed"], 5);
}

#[test]
fn dpi_sweep_table_has_header_and_rows() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("gaps.csv");
    let out = sigeo(&[
        "dpi-sweep",
        "--draws",
        "25",
        "--emit",
        csv.to_str().unwrap(),
        "--no-timestamp",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("draw target_atoms metric_before gap")
    );
    assert_eq!(text.lines().count(), 26);
}

#[test]
fn failed_property_exits_with_two() {
    let out = sigeo(&[
        "jeffrey",
        "--model",
        "bernoulli",
        "--region",
        "0.25:0.75",
        "--check-hausdorff",
        "--rel-tol",
        "1e-9",
        "--no-timestamp",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(json(&out)["passed"], false);
}

#[test]
fn nonpositive_tolerance_is_rejected() {
    let out = sigeo(&[
        "jeffrey",
        "--model",
        "bernoulli",
        "--region",
        "0.25:0.75",
        "--rel-tol",
        "0",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn pushforward_from_kernel_file() {
    let dir = tempfile::tempdir().unwrap();
    let k = write(
        dir.path(),
        "k.json",
        r#"{"rows": [[1, 0], [1, 0], [0, 1]]}"#,
    );
    let out = sigeo(&[
        "pushforward",
        "--model",
        "categorical:3",
        "--theta",
        "0.2,0.3",
        "--kernel",
        &k,
        "--direction",
        "1,0",
        "--no-timestamp",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let masses: Vec<f64> = v["result"]["pushed_masses"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!((masses[0] - 0.5).abs() < 1e-12 && (masses[1] - 0.5).abs() < 1e-12);
    assert!(v["result"]["gap"].as_f64().unwrap() >= -1e-9);
}

#[test]
fn permutation_is_sufficient() {
    let out = sigeo(&[
        "sufficiency",
        "--model",
        "categorical:3",
        "--permutation",
        "2,0,1",
        "--no-timestamp",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["result"]["sufficient_consistent"], true);
}

#[test]
fn cramer_rao_mean_is_efficient() {
    let out = sigeo(&[
        "cramer-rao",
        "--model",
        "bernoulli",
        "--theta",
        "0.3",
        "--n",
        "5",
        "--no-timestamp",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let gap = json(&out)["result"]["gap"]["matrix"][0][0]
        .as_f64()
        .unwrap();
    assert!(gap.abs() < 1e-10, "{gap}");
}

#[test]
fn unknown_estimator_is_a_usage_error() {
    let out = sigeo(&[
        "cramer-rao",
        "--model",
        "bernoulli",
        "--theta",
        "0.3",
        "--estimator",
        "median",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_all_filters_by_module() {
    let out = sigeo(&["verify-all", "--only", "weak", "--no-timestamp"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let ids: Vec<u64> = v["result"]["criteria"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["id"].as_u64().unwrap())
        .collect();
    assert_eq!(ids, vec![11]);
    let out = sigeo(&["verify-all", "--only", "nothing"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn hausdorff_table_and_dimension() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("cover.csv");
    let out = sigeo(&[
        "hausdorff",
        "--model",
        "bernoulli",
        "--region",
        "0.25:0.75",
        "--k",
        "1",
        "--emit",
        csv.to_str().unwrap(),
        "--no-timestamp",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    let d = v["result"]["dimension"]["dimension"].as_f64().unwrap();
    assert!((d - 1.0).abs() < 0.15, "{d}");
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("delta count envelope premeasure ball_premeasure")
    );
    assert_eq!(text.lines().count(), 7);
}
