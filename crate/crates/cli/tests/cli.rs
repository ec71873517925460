use std::fs;
use std::path::Path;
use std::process::{Command, Output};
use std::time::Instant;

use serde_json::Value;

fn metacont(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metacont")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("config.json");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const SHEAR: &str = r#"{"grid": {"dims": [16, 16, 1]}, "system": "fi_incompressible",
    "scenario": {"kind": "random_solenoidal", "amplitude": 0.2, "seed": 3},
    "control": {"t_end": 0.5}, "outputs": {"snapshot_every": 5}}"#;

#[test]
fn run_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHEAR);
    let out = dir.path().join("out");
    let o = metacont(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["status"], "completed");
    for f in ["manifest.json", "summary.json", "reports.ndjson", "reports.csv"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

#[test]
fn thread_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHEAR);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let one = Command::new(env!("CARGO_BIN_EXE_metacont"))
        .env("METACONT_THREADS", "1")
        .args(["run", "--config", &cfg, "--out", a.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(one.status.success());
    let two = Command::new(env!("CARGO_BIN_EXE_metacont"))
        .env("METACONT_THREADS", "3")
        .args(["run", "--config", &cfg, "--out", b.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(two.status.success());
    assert_eq!(fs::read(a.join("manifest.json")).unwrap(), fs::read(b.join("manifest.json")).unwrap());
}

#[test]
fn bad_config_exits_2_with_json_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{"grid": {"dims": [16, 16, 1]}, "system": "fi_incompressible",
            "scenario": {"kind": "standing_shear_wave", "amplitude": 1e-3}, "control": {"t_end": 1}}"#,
    );
    let o = metacont(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(2));
    let err: Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"], "invalid_scenario");

    let o = metacont(&["run", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn empty_sweep_values_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SHEAR);
    let o = metacont(&["sweep", "--config", &cfg, "--axis", "kappa", "--values", ""]);
    assert_eq!(o.status.code(), Some(2));
    assert!(serde_json::from_slice::<Value>(&o.stderr).is_ok());
}

#[test]
fn verify_quick_passes_and_tampering_fails() {
    let dir = tempfile::tempdir().unwrap();
    let report = dir.path().join("report.json");
    let start = Instant::now();
    let o = metacont(&["verify", "--level", "quick", "--report", report.to_str().unwrap()]);
    let secs = start.elapsed().as_secs_f64();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    let r: Value = serde_json::from_slice(&fs::read(&report).unwrap()).unwrap();
    assert_eq!(r["passed"], true);
    eprintln!("quick verify took {secs:.1}s");

    let o = metacont(&["verify", "--level", "quick", "--tamper", "curl_sign"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL curl_analytic"));
}
