//! Deterministic output artifacts: CSV/JSON tables, SHA-256 digests, and
//! run manifests.
//!
//! Numbers are written as scientific notation with 17 significant digits,
//! locale-independent, so identical runs produce byte-identical files.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Clone, Debug)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Num(v) => format_num(*v),
            Cell::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(v) if v.is_finite() => serde_json::json!(v),
            Cell::Num(v) => serde_json::json!(v.to_string()),
            Cell::Text(s) => serde_json::json!(s),
        }
    }
}

pub fn format_num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Column-labelled rows; the common denominator of every output artifact.
#[derive(Clone, Debug)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Self {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push_nums(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row.into_iter().map(Cell::Num).collect());
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self, name: &str, mode: &str) -> String {
        let rows: Vec<Vec<serde_json::Value>> = self
            .rows
            .iter()
            .map(|r| r.iter().map(Cell::json).collect())
            .collect();
        let v = serde_json::json!({
            "name": name,
            "mode": mode,
            "columns": self.columns,
            "rows": rows,
        });
        serde_json::to_string_pretty(&v).expect("table serialization cannot fail") + "\n"
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    format!("{:x}", h.finalize())
}

#[derive(Serialize)]
pub struct OutputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Serialize)]
pub struct IntegratorStats {
    pub steps: u64,
    pub rejections: u64,
    pub rhs_evals: u64,
}

/// Run manifest emitted next to every set of output files.
#[derive(Serialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub scenario: String,
    pub scenario_sha256: String,
    pub mode: String,
    pub wall_time_s: f64,
    pub integrator: IntegratorStats,
    pub outputs: Vec<OutputDigest>,
}

impl RunManifest {
    pub fn new(scenario_path: &Path, scenario_bytes: &[u8], mode: &str) -> Self {
        Self {
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: scenario_path.display().to_string(),
            scenario_sha256: sha256_hex(scenario_bytes),
            mode: mode.to_string(),
            wall_time_s: 0.0,
            integrator: IntegratorStats {
                steps: 0,
                rejections: 0,
                rhs_evals: 0,
            },
            outputs: Vec::new(),
        }
    }
}

/// Write `content` into `dir/name`, recording its digest in the manifest.
pub fn write_output(
    dir: &Path,
    name: &str,
    content: &str,
    manifest: &mut RunManifest,
) -> Result<PathBuf, CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Runtime(format!("cannot create output directory: {e}")))?;
    let path = dir.join(name);
    let mut f = fs::File::create(&path)
        .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", path.display())))?;
    f.write_all(content.as_bytes())
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    manifest.outputs.push(OutputDigest {
        path: name.to_string(),
        sha256: sha256_hex(content.as_bytes()),
    });
    Ok(path)
}

pub fn write_manifest(dir: &Path, name: &str, manifest: &RunManifest) -> Result<PathBuf, CliError> {
    let path = dir.join(format!("{name}.manifest.json"));
    let text = serde_json::to_string_pretty(manifest)
        .expect("manifest serialization cannot fail")
        + "\n";
    fs::write(&path, text)
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
    Ok(path)
}
