use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, ExperimentKind, OutputFormat};
use crate::error::Result;

pub const SCHEMA: &str = "report_v1";
/// Field left out of digests and determinism comparisons.
pub const TIMESTAMP_FIELD: &str = "generated_unix";

/// Flat table for CSV output.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Self { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let bytes = w.into_inner().map_err(|e| std::io::Error::other(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

/// Full-precision cell text; `inf` and `nan` spelled out.
pub fn cell(x: f64) -> String {
    format!("{x:?}")
}

#[derive(Clone, Debug)]
pub struct Report {
    pub kind: ExperimentKind,
    pub config: ExperimentConfig,
    pub results: Value,
    pub table: Table,
}

impl Report {
    pub fn new(kind: ExperimentKind, config: &ExperimentConfig, results: impl Serialize, table: Table) -> Result<Self> {
        Ok(Self { kind, config: config.clone(), results: serde_json::to_value(results)?, table })
    }

    /// Report body without the timestamp; identical for identical runs.
    pub fn canonical(&self) -> Result<Value> {
        Ok(json!({
            "schema": SCHEMA,
            "library_version": env!("CARGO_PKG_VERSION"),
            "experiment": self.kind.name(),
            "seed": self.config.seed,
            "config": serde_json::to_value(&self.config)?,
            "results": self.results,
        }))
    }

    /// SHA-256 of the canonical JSON text.
    pub fn digest(&self) -> Result<String> {
        let text = serde_json::to_string(&self.canonical()?)?;
        Ok(Sha256::digest(text.as_bytes()).iter().map(|b| format!("{b:02x}")).collect())
    }

    pub fn to_json(&self) -> Result<String> {
        let mut v = self.canonical()?;
        let digest = self.digest()?;
        let now = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        let obj = v.as_object_mut().expect("object");
        obj.insert("digest".into(), Value::String(digest));
        obj.insert(TIMESTAMP_FIELD.into(), Value::from(now));
        Ok(serde_json::to_string_pretty(&v)? + "\n")
    }

    /// Writes `<experiment>.json` and/or `<experiment>.csv` into `dir`.
    pub fn emit(&self, dir: &Path, format: OutputFormat) -> Result<Vec<PathBuf>> {
        fs::create_dir_all(dir)?;
        let mut out = Vec::new();
        if format.json() {
            let p = dir.join(format!("{}.json", self.kind.name()));
            fs::write(&p, self.to_json()?)?;
            out.push(p);
        }
        if format.csv() {
            let p = dir.join(format!("{}.csv", self.kind.name()));
            fs::write(&p, self.table.to_csv()?)?;
            out.push(p);
        }
        Ok(out)
    }
}

/// Drops the timestamp from a written JSON report for comparisons.
pub fn strip_timestamp(json_text: &str) -> Result<Value> {
    let mut v: Value = serde_json::from_str(json_text)?;
    if let Some(o) = v.as_object_mut() {
        o.remove(TIMESTAMP_FIELD);
    }
    Ok(v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timestamp_is_the_only_difference() {
        let cfg = ExperimentConfig::new(ExperimentKind::Ledger, 3);
        let mut t = Table::new(&["name", "value"]);
        t.push(vec!["x".into(), cell(1.5)]);
        let r = Report::new(ExperimentKind::Ledger, &cfg, json!({"x": 1.5}), t).unwrap();
        let a = strip_timestamp(&r.to_json().unwrap()).unwrap();
        let b = strip_timestamp(&r.to_json().unwrap()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a["schema"], SCHEMA);
        assert_eq!(a["digest"], r.digest().unwrap());
        assert_eq!(r.table.to_csv().unwrap(), "name,value\nx,1.5\n");
        assert_eq!(cell(f64::INFINITY), "inf");
    }
}
