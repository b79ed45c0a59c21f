//! Black-box checks of the ddforge binary: exit codes, artifact files,
//! and bit-level reproducibility for a fixed config and seed.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ddforge"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("failed to spawn ddforge")
}

fn assert_csv_with_header(path: &Path, header_prefix: &str) {
    let text = fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert!(
        text.starts_with(header_prefix),
        "{} starts with {:?}",
        path.display(),
        &text[..text.len().min(80)]
    );
    assert!(text.lines().count() > 1, "{} has no data rows", path.display());
}

#[test]
fn unknown_config_field_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"noise": {"lambda_over_2pi_khz": 80, "typo": 1}}"#).unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "filters"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn invalid_parameter_exits_with_config_code() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"noise": {"tau_c_us": -1.0}}"#).unwrap();
    let out = run(&["--config", cfg.to_str().unwrap(), "decay"]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unknown_protocol_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "--out",
        dir.path().to_str().unwrap(),
        "--protocol",
        "carr",
        "robustness",
    ]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn swap_writes_oscillation_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["--out", dir.path().to_str().unwrap(), "swap"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_csv_with_header(&dir.path().join("fig1b.csv"), "t_ns,");
}

#[test]
fn decay_is_deterministic() {
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    for d in [&d1, &d2] {
        let out = run(&["--out", d.path().to_str().unwrap(), "decay"]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(d1.path().join("fig2.csv")).unwrap();
    let b = fs::read(d2.path().join("fig2.csv")).unwrap();
    assert_eq!(a, b, "fig2.csv differs between identical runs");
}

#[test]
fn filters_writes_spectral_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["--out", dir.path().to_str().unwrap(), "filters"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_csv_with_header(&dir.path().join("filters.csv"), "omega");
}

#[test]
fn optimize_writes_sequence_and_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "--out",
        dir.path().to_str().unwrap(),
        "--n-pulses",
        "2",
        "optimize",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let seq: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("tls_opt_sequence.json")).unwrap())
            .unwrap();
    assert!(seq.is_object(), "sequence JSON is not an object");
    assert_csv_with_header(&dir.path().join("optimize_trace.csv"), "iteration");
    assert_csv_with_header(&dir.path().join("comparison.csv"), "protocol");
}

#[test]
fn pmme_writes_curve_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&["--out", dir.path().to_str().unwrap(), "pmme"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_csv_with_header(&dir.path().join("pmme.csv"), "t_us");
    let report = fs::read_to_string(dir.path().join("pmme_report.txt")).unwrap();
    assert!(!report.trim().is_empty());
}

#[test]
fn robustness_is_reproducible_for_fixed_seed() {
    // Strong noise and a small ensemble keep the scan quick.
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{
            "noise": {"lambda_over_2pi_khz": 500.0},
            "mc": {"n_traj": 100, "sigma_eps_list": [0.0, 0.05]}
        }"#,
    )
    .unwrap();
    let d1 = tempfile::tempdir().unwrap();
    let d2 = tempfile::tempdir().unwrap();
    for d in [&d1, &d2] {
        let out = run(&[
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            d.path().to_str().unwrap(),
            "--protocol",
            "cpmg",
            "robustness",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let a = fs::read(d1.path().join("fig4c.csv")).unwrap();
    let b = fs::read(d2.path().join("fig4c.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "fig4c.csv differs between identical seeded runs");
}
