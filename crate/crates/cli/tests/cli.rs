use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ebnarx"))
        .args(args)
        .current_dir(dir)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn trained(dir: &Path, model: &str) {
    ok(dir, &["generate", "--system", "arx", "--len", "200", "--seed", "5", "--out", "arx.csv"]);
    fs::write(
        dir.join("cfg.json"),
        r#"{"width": 8, "train": {"max_epochs": 3}, "nce": {"num_noise": 16}}"#,
    )
    .unwrap();
    ok(
        dir,
        &[
            "train", "--data", "arx.csv", "--dy", "2", "--du", "2", "--config", "cfg.json", "--model", model,
            "--seed", "1", "--out", "model.json", "--log", "log.csv", "--train-fraction", "0.5",
        ],
    );
}

#[test]
fn generate_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    for name in ["a.csv", "b.csv"] {
        ok(p, &["generate", "--system", "chen", "--len", "50", "--sigma-v", "0.3", "--sigma-w", "0.3", "--seed", "9", "--out", name]);
    }
    let a = fs::read_to_string(p.join("a.csv")).unwrap();
    assert_eq!(a, fs::read_to_string(p.join("b.csv")).unwrap());
    assert!(a.starts_with("u,y\n"));
    assert_eq!(a.lines().count(), 51);
}

#[test]
fn train_predict_evaluate_export() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    trained(p, "ebm");
    let log = fs::read_to_string(p.join("log.csv")).unwrap();
    assert_eq!(log.lines().next().unwrap(), "epoch,train_loss,val_loss,lr");
    assert_eq!(log.lines().count(), 4);

    let bounds = p.join("inf.json");
    fs::write(&bounds, r#"{"bounds": [-40.0, 40.0], "grid_points": 2001}"#).unwrap();
    let bounds = bounds.to_str().unwrap();
    let pred: serde_json::Value =
        serde_json::from_str(&ok(p, &["predict", "--model", "model.json", "--x", "0.1,-0.2,0.5,1.0", "--inference", bounds])).unwrap();
    assert!(pred["map"].is_f64());
    assert!(pred["intervals"]["0.65"].is_array());

    let eval: serde_json::Value = serde_json::from_str(&ok(
        p,
        &["evaluate", "--model", "model.json", "--data", "arx.csv", "--from-sample", "100", "--inference", bounds],
    ))
    .unwrap();
    assert_eq!(eval["rows"], 100);
    assert!(eval["mse"].as_f64().unwrap() >= 0.0);

    ok(
        p,
        &["export-density", "--model", "model.json", "--data", "arx.csv", "--from-sample", "197", "--inference", bounds, "--out", "exp"],
    );
    let csv = fs::read_to_string(p.join("exp/density.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2001);
}

#[test]
fn fcn_model_trains() {
    let dir = tempfile::tempdir().unwrap();
    trained(dir.path(), "fcn");
    let json = fs::read_to_string(dir.path().join("model.json")).unwrap();
    assert!(json.starts_with("{\"kind\":\"fcn\""));
}

#[test]
fn sweep_reports_best() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    fs::write(
        p.join("spec.json"),
        r#"{"data": {"source": "simulated", "generator": {"kind": "ar", "noise": "gaussian"},
                     "n_train": 80, "n_val": 20, "seed": 0},
            "window": {"dy": 1, "du": 0}, "model": "fcn",
            "widths": [4], "batch_sizes": [16, 32], "seeds": [0, 1],
            "train": {"max_epochs": 3}, "inference": {"grid_points": 128}}"#,
    )
    .unwrap();
    let best: serde_json::Value = serde_json::from_str(&ok(p, &["sweep", "--spec", "spec.json", "--out", "runs", "--seed", "7"])).unwrap();
    assert_eq!(best["seed"], 7);
    let lines = fs::read_to_string(p.join("runs/results.ndjson")).unwrap();
    assert_eq!(lines.lines().count(), 2);
}

#[test]
fn errors_exit_nonzero_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let out = run(p, &["predict", "--model", "missing.json", "--x", "1"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));

    fs::write(p.join("bad.csv"), "u,y\n0,1\n0,oops\n").unwrap();
    let out = run(p, &["train", "--data", "bad.csv", "--dy", "1", "--out", "m.json"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let out = run(p, &["generate", "--system", "ar", "--len", "1", "--out", "x.csv"]);
    assert!(!out.status.success());
}
