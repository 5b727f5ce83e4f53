//! Behaviour of the `mixgraph` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mixgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixgraph"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn simulate_into(dir: &Path, seed: &str) {
    let out = mixgraph(&[
        "simulate",
        "--n",
        "120",
        "--p",
        "10",
        "--seed",
        seed,
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn no_command_is_a_usage_error() {
    assert_eq!(mixgraph(&[]).status.code(), Some(2));
    assert_eq!(mixgraph(&["fit-em", "--bogus"]).status.code(), Some(2));
}

#[test]
fn flags_override_config_values() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("sim");
    simulate_into(&data, "1");
    let cfg = tmp.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"seed": 7, "lambda": 0.2, "em": {"max_iters": 2, "mc": {"n_samples": 20, "burn_in": 5}}}"#,
    )
    .unwrap();
    let out_dir = tmp.path().join("fit");
    let out = mixgraph(&[
        "fit-em",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "9",
        "--data",
        data.join("data.csv").to_str().unwrap(),
        "--schema",
        data.join("schema.json").to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m = manifest(&out_dir);
    assert_eq!(m["config"]["seed"], 9);
    assert_eq!(m["config"]["lambda"], 0.2);
}

#[test]
fn mislabeled_binary_column_is_a_compute_error() {
    let tmp = tempfile::tempdir().unwrap();
    let csv = tmp.path().join("d.csv");
    let schema = tmp.path().join("s.json");
    fs::write(&csv, "x,y\n0,1.5\n1,2.0\n2,0.3\n1,0.9\n").unwrap();
    fs::write(
        &schema,
        r#"{"columns": [{"name": "x", "kind": "binary"}, {"name": "y", "kind": "continuous"}]}"#,
    )
    .unwrap();
    let out = mixgraph(&[
        "fit-skeptic",
        "--data",
        csv.to_str().unwrap(),
        "--schema",
        schema.to_str().unwrap(),
        "--lambda",
        "0.1",
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("x"));
}

#[test]
fn simulate_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    simulate_into(&a, "3");
    simulate_into(&b, "3");
    for file in ["data.csv", "schema.json", "truth_edges.tsv", "truth_theta.csv"] {
        assert_eq!(fs::read(a.join(file)).unwrap(), fs::read(b.join(file)).unwrap(), "{file}");
    }
}

#[test]
fn select_reads_a_grid_run() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("sim");
    simulate_into(&data, "4");
    let fit = tmp.path().join("fit");
    let out = mixgraph(&[
        "fit-em",
        "--data",
        data.join("data.csv").to_str().unwrap(),
        "--schema",
        data.join("schema.json").to_str().unwrap(),
        "--lambda-grid",
        "auto10",
        "--n-samples",
        "20",
        "--burn-in",
        "5",
        "--max-iters",
        "2",
        "--out",
        fit.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let sel = tmp.path().join("sel");
    let out = mixgraph(&[
        "select",
        "--run",
        fit.to_str().unwrap(),
        "--criterion",
        "bic",
        "--out",
        sel.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let ic = fs::read_to_string(sel.join("ic.tsv")).unwrap();
    assert_eq!(ic.lines().count(), 11);
    assert!(String::from_utf8_lossy(&out.stdout).starts_with("selected\tbic"));
}

#[test]
fn skeptic_writes_requested_formats() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("sim");
    simulate_into(&data, "5");
    let fit = tmp.path().join("fit");
    let out = mixgraph(&[
        "fit-skeptic",
        "--data",
        data.join("data.csv").to_str().unwrap(),
        "--schema",
        data.join("schema.json").to_str().unwrap(),
        "--mode",
        "copula",
        "--lambda",
        "0.15",
        "--formats",
        "edges-tsv,dot",
        "--out",
        fit.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(fit.join("edges.tsv").exists());
    assert!(fit.join("graph.dot").exists());
    assert!(fit.join("pair_fits.tsv").exists());
    assert!(!fit.join("theta.csv").exists());
}
