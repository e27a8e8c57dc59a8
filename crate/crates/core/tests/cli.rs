//! Command-line behaviour: exit codes and report files.

mod common;

use std::path::Path;
use std::process::{Command, Output};

fn fwdrep(command: &str, config: &Path, out: &Path, assert: bool) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fwdrep"));
    cmd.arg(command).arg(config).arg("--out").arg(out);
    if assert {
        cmd.arg("--assert");
    }
    cmd.output().expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn malformed_config_exits_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.toml", "schema_version = 1\n[norms\nd = 1\n");
    assert_eq!(
        fwdrep("norms", &cfg, &tmp.path().join("out"), false).status.code(),
        Some(2)
    );
}

#[test]
fn unknown_field_and_schema_version_are_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let extra = write(tmp.path(), "extra.toml", "schema_version = 1\nmystery = 3\n");
    assert_eq!(
        fwdrep("norms", &extra, &tmp.path().join("a"), false).status.code(),
        Some(2)
    );
    let version = write(
        tmp.path(),
        "v.toml",
        "schema_version = 9\n[norms]\nd = 1\np = [1.0]\nx = [0.0]\n",
    );
    assert_eq!(
        fwdrep("norms", &version, &tmp.path().join("b"), false).status.code(),
        Some(2)
    );
}

#[test]
fn unknown_check_exits_with_code_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "verify.toml",
        "schema_version = 1\nseed = 1\n[verify]\nchecks = [\"no_such_check\"]\n",
    );
    let out = fwdrep("verify", &cfg, &tmp.path().join("out"), false);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_such_check"));
}

#[test]
fn missing_seed_is_a_configuration_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "flow.toml",
        "schema_version = 1\n[model]\nkind = \"brownian\"\n[flow]\nstarts = [0.0]\nt = 0.1\ndt = 0.01\n",
    );
    assert_eq!(
        fwdrep("flow", &cfg, &tmp.path().join("out"), false).status.code(),
        Some(2)
    );
}

#[test]
fn assert_turns_a_breach_into_exit_code_1() {
    let tmp = tempfile::tempdir().unwrap();
    // a 1e-12 tolerance cannot be met at this truncation
    let cfg = write(
        tmp.path(),
        "norms.toml",
        "schema_version = 1\n[norms]\nd = 1\np = [1.0]\nx = [0.0]\nn_max = 16\ntolerance = 1e-12\n",
    );
    assert_eq!(
        fwdrep("norms", &cfg, &tmp.path().join("a"), false).status.code(),
        Some(0)
    );
    assert_eq!(
        fwdrep("norms", &cfg, &tmp.path().join("b"), true).status.code(),
        Some(1)
    );
}

#[test]
fn every_command_writes_its_reports() {
    let tmp = tempfile::tempdir().unwrap();
    let extra = [
        ("norms", "norms.csv"),
        ("flow", "trajectories.csv"),
        ("solve", "series.csv"),
        ("kernel", "kde.csv"),
        ("verify", "summary.csv"),
    ];
    for ((command, text), (_, file)) in common::SMALL_CONFIGS.iter().zip(extra) {
        let cfg = write(tmp.path(), &format!("{command}.toml"), text);
        let out = tmp.path().join(command);
        let run = fwdrep(command, &cfg, &out, true);
        assert_eq!(
            run.status.code(),
            Some(0),
            "{command}: {}",
            String::from_utf8_lossy(&run.stderr)
        );
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
        assert_eq!(report["command"], *command);
        assert_eq!(report["config_sha256"].as_str().unwrap().len(), 64);
        assert!(report["metadata"]["timestamp_unix"].is_u64());
        let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
        assert!(summary.starts_with("item,status,value,threshold"));
        assert!(out.join(file).exists(), "{command} did not write {file}");
    }
}
