//! Report rows, JSON and CSV output.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

/// One certification at a grid point `(instance, prompt, k, l, algorithm, T)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub instance: String,
    pub prompt: String,
    pub algorithm: String,
    pub k: usize,
    pub l: usize,
    pub iterations: usize,
    pub seed: u64,
    pub certified_rate: f64,
    pub weak_rate: f64,
    pub threshold: f64,
    pub regret_slack: f64,
    /// Best strict opponent, as response labels.
    pub witness: String,
    /// Last iterate for self-play, the certified policy otherwise; `;`-separated.
    pub candidate: String,
    /// Best-response gap of `candidate` in the `k`-copy game.
    pub candidate_gap: f64,
    pub pass: bool,
    pub wall_time_ms: f64,
}

/// One numeric check of a reproduced claim.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub target: String,
    pub instance: String,
    pub case: String,
    pub k: usize,
    pub l: usize,
    pub value: f64,
    pub threshold: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rows: Vec<Row>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl Report {
    pub fn from_rows(command: impl Into<String>, rows: Vec<Row>) -> Self {
        let pass = rows.iter().all(|r| r.pass);
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            rows,
            checks: Vec::new(),
            pass,
        }
    }

    pub fn from_checks(command: impl Into<String>, checks: Vec<Check>) -> Self {
        let pass = checks.iter().all(|c| c.pass);
        Self {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            rows: Vec::new(),
            checks,
            pass,
        }
    }

    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            1
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        if self.checks.is_empty() {
            if self.rows.is_empty() {
                w.write_record(row_header())?;
            }
            for r in &self.rows {
                w.serialize(r)?;
            }
        } else {
            for c in &self.checks {
                w.serialize(c)?;
            }
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Writes `<stem>.json` and `<stem>.csv` into `dir`.
    pub fn write_to(&self, dir: &Path, stem: &str) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        write_atomic(&dir.join(format!("{stem}.json")), self.to_json()?.as_bytes())?;
        write_atomic(&dir.join(format!("{stem}.csv")), self.to_csv()?.as_bytes())?;
        Ok(())
    }
}

pub fn row_header() -> [&'static str; 16] {
    [
        "instance",
        "prompt",
        "algorithm",
        "k",
        "l",
        "iterations",
        "seed",
        "certified_rate",
        "weak_rate",
        "threshold",
        "regret_slack",
        "witness",
        "candidate",
        "candidate_gap",
        "pass",
        "wall_time_ms",
    ]
}

/// Write to a sibling temp file, then rename over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp{}", std::process::id()));
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path).inspect_err(|_| {
        let _ = std::fs::remove_file(&tmp);
    })?;
    Ok(())
}

pub fn format_probs(p: &[f64]) -> String {
    p.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";")
}
