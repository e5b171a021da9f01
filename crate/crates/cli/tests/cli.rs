use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn fracflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracflow"))
        .args(args)
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn small_run(dir: &Path) -> Output {
    fracflow(&[
        "run",
        "--scenario",
        "circle_2d",
        "--n",
        "32",
        "--eps",
        "0.04",
        "--tau",
        "1e-3",
        "--t-end",
        "0.005",
        "--output-dir",
        dir.to_str().unwrap(),
    ])
}

#[test]
fn invalid_overrides_exit_with_a_report() {
    let out = fracflow(&["run", "--eps=-1", "--tau=0"]);
    assert_eq!(out.status.code(), Some(2));
    let report = json(&out);
    assert_eq!(report["valid"], false);
    let fields: Vec<&str> = report["issues"]
        .as_array()
        .unwrap()
        .iter()
        .map(|i| i["field"].as_str().unwrap())
        .collect();
    assert!(fields.contains(&"eps") && fields.contains(&"tau"), "{fields:?}");
}

#[test]
fn unknown_config_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    std::fs::write(&path, r#"{"eps": 0.05, "epsilon": 0.05}"#).unwrap();
    let out = fracflow(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("epsilon"));
}

#[test]
fn runs_are_tagged_and_reproducible() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ra, rb) = (small_run(a.path()), small_run(b.path()));
    assert!(ra.status.success(), "{}", String::from_utf8_lossy(&ra.stderr));
    assert!(rb.status.success());
    let (sa, sb) = (json(&ra), json(&rb));
    assert_eq!(sa["steps"], 5);
    assert_eq!(sa["config_hash"], sb["config_hash"]);
    assert!(sa["energy_final"].as_f64().unwrap() < sa["energy_initial"].as_f64().unwrap());

    let la = std::fs::read(a.path().join("ledger.csv")).unwrap();
    let lb = std::fs::read(b.path().join("ledger.csv")).unwrap();
    assert_eq!(la, lb);

    let hash = sa["config_hash"].as_str().unwrap();
    for table in ["ledger.csv", "diagnostics.csv", "oracle.csv"] {
        let mut rdr = csv::Reader::from_path(a.path().join(table)).unwrap();
        let col = rdr.headers().unwrap().iter().position(|h| h == "config_hash").unwrap();
        let rows: Vec<_> = rdr.records().map(|r| r.unwrap()).collect();
        assert!(!rows.is_empty(), "{table}");
        assert!(rows.iter().all(|r| &r[col] == hash), "{table}");
    }
}

#[test]
fn verify_passes() {
    let out = fracflow(&["verify"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report = json(&out);
    assert!(report.is_object());
}
