//! `report.json` and `cases.csv`, written atomically.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::Result;

pub const REPORT_SCHEMA: &str = "dualiscope.report";
pub const REPORT_VERSION: u32 = 1;

/// Rows of `cases.csv`; every cell is preformatted so reruns are byte-identical.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: Table) {
        self.rows.extend(other.rows);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|c| csv_cell(c)).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn csv_cell(c: &str) -> String {
    if c.contains([',', '"', '\n']) {
        format!("\"{}\"", c.replace('"', "\"\""))
    } else {
        c.to_string()
    }
}

/// Result of one experiment before it is written out.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub worst_case: Option<String>,
    pub summary: serde_json::Value,
    pub table: Table,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: String,
    pub version: u32,
    pub experiment: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub passed: bool,
    pub cases: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub worst_case: Option<String>,
    pub summary: serde_json::Value,
}

impl Report {
    pub fn new(experiment: &str, seed: Option<u64>, outcome: &Outcome) -> Self {
        Report {
            schema: REPORT_SCHEMA.to_string(),
            version: REPORT_VERSION,
            experiment: experiment.to_string(),
            seed,
            passed: outcome.passed,
            cases: outcome.table.rows.len(),
            worst_case: outcome.worst_case.clone(),
            summary: outcome.summary.clone(),
        }
    }
}

/// Writes through a temporary file in the same directory and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path
        .parent()
        .filter(|p| !p.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    fs::create_dir_all(dir)?;
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("out");
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn write_outputs(dir: &Path, report: &Report, table: &Table) -> Result<()> {
    let mut json =
        serde_json::to_string_pretty(report).map_err(|e| crate::Error::Io(e.to_string()))?;
    json.push('\n');
    write_atomic(&dir.join("report.json"), json.as_bytes())?;
    write_atomic(&dir.join("cases.csv"), table.to_csv().as_bytes())
}

/// Shortest round-trip representation of a float.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}
