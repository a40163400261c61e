//! End-to-end tests of the `ptigp` binary: exit codes, output schemas,
//! byte determinism, and configuration overrides.

use std::io::Write;
use std::process::{Command, Output};

fn ptigp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ptigp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).expect("utf-8 stderr")
}

#[test]
fn check_passes_the_default_model_and_rejects_the_broken_phase() {
    let ok = ptigp(&["check", "--path.samples=128"]);
    assert_eq!(ok.status.code(), Some(0), "stderr: {}", stderr(&ok));
    assert!(stdout(&ok).contains("check: ok"));

    let broken = ptigp(&[
        "check",
        "--model.parameters.a=1",
        "--model.parameters.b=2",
        "--path.samples=128",
    ]);
    assert_eq!(broken.status.code(), Some(2));
    assert!(stderr(&broken).contains("broken PT phase"));
}

#[test]
fn usage_and_configuration_errors_exit_three() {
    let mut file = tempfile::NamedTempFile::new().unwrap();
    file.write_all(b"path = {").unwrap();
    let malformed = ptigp(&["check", file.path().to_str().unwrap()]);
    assert_eq!(malformed.status.code(), Some(3));
    assert!(stderr(&malformed).contains("configuration error"));

    let bad_value = ptigp(&["phases", "--path.samples=8"]);
    assert_eq!(bad_value.status.code(), Some(3));
    assert!(stderr(&bad_value).contains("samples"));

    let unknown_key = ptigp(&["phases", "--set", "no_such.key=1"]);
    assert_eq!(unknown_key.status.code(), Some(3));

    let unknown_tolerance = ptigp(&["check", "--tolerances.bogus=0.1"]);
    assert_eq!(unknown_tolerance.status.code(), Some(3));

    let unknown_subcommand = ptigp(&["frobnicate"]);
    assert_eq!(unknown_subcommand.status.code(), Some(3));

    let missing_file = ptigp(&["phases", "/no/such/config.toml"]);
    assert_eq!(missing_file.status.code(), Some(3));

    let help = ptigp(&["--help"]);
    assert_eq!(help.status.code(), Some(0));
    for sub in ["check", "phases", "igp-scan", "critical", "oracle", "evolve"] {
        assert!(stdout(&help).contains(sub), "help lists `{sub}`");
    }
}

#[test]
fn phases_csv_columns_match_the_contract_and_json_carries_a_schema_version() {
    let csv = ptigp(&["phases", "--path.samples=256", "--path.theta=1.0"]);
    assert_eq!(csv.status.code(), Some(0));
    let text = stdout(&csv);
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "level,re_theta1,im_theta1,theta2,theta_berry,branch,residual_theta2_berry,residual_theta1_theta2"
    );
    assert_eq!(lines.count(), 2, "one row per level");
    assert!(!text.contains('\r'), "line endings are bare newlines");

    let json = ptigp(&[
        "phases",
        "--path.samples=256",
        "--path.theta=1.0",
        "--output.format=json",
    ]);
    assert_eq!(json.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&json)).unwrap();
    assert_eq!(doc["schema_version"], 1);
    assert_eq!(doc["command"], "phases");
    assert_eq!(doc["columns"].as_array().unwrap().len(), 8);
    assert_eq!(doc["records"].as_array().unwrap().len(), 2);
    assert_eq!(doc["records"][0].as_array().unwrap().len(), 8);
    // Levels are ordered by energy, and the two theta^1 values mirror
    // (2*pi - re, -im) between the levels.
    let re0 = doc["records"][0][1].as_f64().unwrap();
    let re1 = doc["records"][1][1].as_f64().unwrap();
    assert!((re0 + re1 - 2.0 * std::f64::consts::PI).abs() < 1e-6);
}

#[test]
fn identical_scans_are_byte_identical_including_the_critical_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let args = |name: &str| {
        [
            "igp-scan".to_string(),
            "--scan.theta_steps=6".to_string(),
            "--scan.beta_steps=5".to_string(),
            "--scan.theta_min=0.4".to_string(),
            "--scan.theta_max=2.6".to_string(),
            "--path.samples=256".to_string(),
            format!("--output.path={}", dir.path().join(name).display()),
        ]
    };
    for name in ["a.csv", "b.csv"] {
        let run = Command::new(env!("CARGO_BIN_EXE_ptigp"))
            .args(args(name))
            .output()
            .unwrap();
        assert_eq!(run.status.code(), Some(0), "stderr: {}", stderr(&run));
    }
    let a = std::fs::read(dir.path().join("a.csv")).unwrap();
    let b = std::fs::read(dir.path().join("b.csv")).unwrap();
    assert!(!a.is_empty());
    assert_eq!(a, b, "scan output is byte-stable");
    let ac = std::fs::read(dir.path().join("a.critical.csv")).unwrap();
    let bc = std::fs::read(dir.path().join("b.critical.csv")).unwrap();
    assert_eq!(ac, bc, "critical sidecar is byte-stable");

    let text = String::from_utf8(a).unwrap();
    let header = text.lines().next().unwrap();
    assert_eq!(
        header,
        "theta,beta,theta_g,amplitude_abs,regime,eff_weight_ratio"
    );
    assert_eq!(text.lines().count(), 1 + 6 * 5, "row-major full grid");
    // Row-major order: theta varies slowest.
    let first_fields: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    let second_fields: Vec<&str> = text.lines().nth(2).unwrap().split(',').collect();
    assert_eq!(first_fields[0], second_fields[0], "theta fixed along beta");
    assert!(first_fields[1] != second_fields[1], "beta advances first");
}

#[test]
fn command_line_overrides_beat_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let config_path = dir.path().join("run.toml");
    std::fs::write(
        &config_path,
        "[path]\ntheta = 0.8\nsamples = 256\n\n[output]\nformat = \"csv\"\n",
    )
    .unwrap();

    let overridden = ptigp(&[
        "phases",
        config_path.to_str().unwrap(),
        "--path.theta=1.2",
    ]);
    let direct = ptigp(&["phases", "--path.samples=256", "--path.theta=1.2"]);
    assert_eq!(overridden.status.code(), Some(0));
    assert_eq!(stdout(&overridden), stdout(&direct));

    let base = ptigp(&["phases", config_path.to_str().unwrap()]);
    assert_ne!(stdout(&base), stdout(&overridden));
}

#[test]
fn oracle_flags_fast_ramps_per_row_while_evolve_gates_them() {
    let oracle = ptigp(&["oracle", "--path.samples=256", "--set", "oracle.ramps=[1,64]"]);
    assert_eq!(oracle.status.code(), Some(0), "breakdown is not fatal here");
    let text = stdout(&oracle);
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].ends_with("true"), "ramp 1 leaks and is flagged");
    assert!(rows[1].ends_with("false"), "ramp 64 is adiabatic");

    let evolve = ptigp(&["evolve", "--path.samples=256", "--evolve.ramp=1"]);
    assert_eq!(evolve.status.code(), Some(2));
    assert!(stderr(&evolve).contains("adiabaticity breakdown"));

    let fine = ptigp(&["evolve", "--path.samples=256", "--evolve.ramp=64"]);
    assert_eq!(fine.status.code(), Some(0));
    assert!(stdout(&fine).lines().nth(1).unwrap().ends_with("false"));
}

#[test]
fn critical_locates_the_transition_pair_on_a_focused_window() {
    let run = ptigp(&[
        "critical",
        "--scan.theta_min=1.1",
        "--scan.theta_max=2.1",
        "--scan.theta_steps=40",
        "--scan.beta_min=1.2",
        "--scan.beta_max=2.2",
        "--scan.beta_steps=30",
        "--path.samples=384",
        "--threads=1",
    ]);
    assert_eq!(run.status.code(), Some(0), "stderr: {}", stderr(&run));
    let text = stdout(&run);
    let rows: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|line| line.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 2, "both transitions in the window: {text}");
    for (row, expected_cos) in rows.iter().zip([1.0 / 3.0, -1.0 / 3.0]) {
        assert!((row[0].cos() - expected_cos).abs() < 2e-3);
        let arc = 0.25 * 5.0f64.sqrt() * std::f64::consts::PI * row[0].sin();
        assert!((row[1] - arc).abs() < 2e-3, "beta sits on the balance arc");
        assert!((row[2].abs() - std::f64::consts::PI).abs() < 0.05);
    }
}
