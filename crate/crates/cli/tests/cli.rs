use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn drocp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drocp"))
        .args(args)
        .env("RUST_BACKTRACE", "0")
        .output()
        .expect("spawn drocp")
}

fn report(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn pho_case1_writes_trajectory_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = drocp(&["solve", "--problem", "pho", "--n", "1000", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1002);
    assert!(csv.starts_with("t,"));

    let r = report(dir.path());
    assert_eq!(r["schema_version"], 1);
    assert_eq!(r["terminated_by"], "ToleranceMet");
    assert!(r["kkt"].is_object());
    assert!(r.get("oracle").is_none());
}

#[test]
fn psm_case2_hits_iteration_cap_without_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = drocp(&["solve", "--problem", "psm", "--case", "2", "--n", "200", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(dir.path());
    assert_eq!(r["terminated_by"], "IterationCap");
    assert_eq!(r["iterations"], 200);
}

#[test]
fn config_round_trip_with_oracle_check() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = drocp(&["config", "--problem", "pho"]);
    assert!(cfg.status.success());
    let cfg_path = dir.path().join("pho.json");
    fs::write(&cfg_path, &cfg.stdout).unwrap();

    let out_dir = dir.path().join("run");
    let out = drocp(&[
        "solve",
        "--config",
        cfg_path.to_str().unwrap(),
        "--gamma",
        "0.5",
        "--n",
        "100",
        "--oracle-check",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = report(&out_dir);
    assert_eq!(r["terminated_by"], "ToleranceMet");
    let x = r["oracle"]["linf_x"].as_f64().unwrap();
    let u = r["oracle"]["linf_u"].as_f64().unwrap();
    assert!(x <= 1e-6 && u <= 1e-6, "oracle distance x {x:e} u {u:e}");
}

#[test]
fn config_requires_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = drocp(&["config", "--problem", "psm", "--case", "2"]);
    let cfg_path = dir.path().join("psm.json");
    fs::write(&cfg_path, &cfg.stdout).unwrap();
    let out = drocp(&["solve", "--config", cfg_path.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--gamma"));
}

#[test]
fn sweep_writes_one_row_per_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let out = drocp(&[
        "solve",
        "--problem",
        "pho",
        "--n",
        "100",
        "--sweep-gamma",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    let gammas: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(gammas.len(), 2);
    assert!((gammas[0] - 1.0 / 3.0).abs() < 1e-15);
    assert!((gammas[1] - 2.0 / 3.0).abs() < 1e-15);
    assert!(!dir.path().join("trajectory.csv").exists());
}

#[test]
fn malformed_config_reports_location() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("bad.json");
    fs::write(&cfg_path, "{\n  \"n\": 2,\n  \"m\": }\n").unwrap();
    let out = drocp(&["solve", "--config", cfg_path.to_str().unwrap(), "--gamma", "0.5"]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |sub: &str| {
        let d = dir.path().join(sub);
        let out = drocp(&["solve", "--problem", "psm", "--case", "2", "--n", "300", "--out", d.to_str().unwrap()]);
        assert!(out.status.success());
        fs::read(d.join("trajectory.csv")).unwrap()
    };
    assert_eq!(run("a"), run("b"));
}

#[test]
fn timing_records_repeats() {
    let dir = tempfile::tempdir().unwrap();
    let out = drocp(&["solve", "--problem", "pho", "--n", "200", "--timing", "2", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let t = &report(dir.path())["timing"];
    assert_eq!(t["repeats"], 2);
    assert!(t["min"].as_f64().unwrap() <= t["mean"].as_f64().unwrap());
}
