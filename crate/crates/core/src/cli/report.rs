//! Report files: `report.json` with a reproducible `result` block and a
//! separate `metadata` block, plus `summary.csv`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::error::Result;

pub fn config_hash(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// One row of `summary.csv`.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub item: String,
    pub status: String,
    pub value: f64,
    pub threshold: f64,
}

impl SummaryRow {
    pub fn new(item: impl Into<String>, status: impl Into<String>, value: f64, threshold: f64) -> Self {
        SummaryRow {
            item: item.into(),
            status: status.into(),
            value,
            threshold,
        }
    }

    pub fn check(item: impl Into<String>, passed: bool, value: f64, threshold: f64) -> Self {
        Self::new(item, if passed { "PASS" } else { "FAIL" }, value, threshold)
    }
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from("item,status,value,threshold\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{:.12e},{:.12e}", r.item, r.status, r.value, r.threshold);
    }
    out
}

/// Everything a command produces.
pub struct Outcome {
    pub command: &'static str,
    pub result: Value,
    pub summary: Vec<SummaryRow>,
    /// Extra files (name, contents) written next to the report.
    pub files: Vec<(String, String)>,
}

impl Outcome {
    pub fn breaches(&self) -> Vec<&SummaryRow> {
        self.summary.iter().filter(|r| r.status == "FAIL").collect()
    }
}

/// The `result` block is byte-identical for identical config and seed;
/// the timestamp lives only in `metadata`.
pub fn write_outcome(dir: &Path, outcome: &Outcome, config_text: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let timestamp = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let report = json!({
        "command": outcome.command,
        "config_sha256": config_hash(config_text),
        "result": outcome.result,
        "metadata": {
            "timestamp_unix": timestamp,
            "version": env!("CARGO_PKG_VERSION"),
        },
    });
    let path = dir.join("report.json");
    fs::write(&path, serde_json::to_string_pretty(&report)?)?;
    fs::write(dir.join("summary.csv"), summary_csv(&outcome.summary))?;
    for (name, contents) in &outcome.files {
        fs::write(dir.join(name), contents)?;
    }
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_hex_sha256() {
        assert_eq!(
            config_hash(""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn summary_has_header_and_rows() {
        let csv = summary_csv(&[
            SummaryRow::check("a", true, 1.0, 2.0),
            SummaryRow::check("b", false, 3.0, 2.0),
        ]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "item,status,value,threshold");
        assert!(lines[1].starts_with("a,PASS,"));
        assert!(lines[2].starts_with("b,FAIL,"));
    }
}
