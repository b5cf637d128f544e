use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub const REPORT_FILE: &str = "report.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportEntry {
    pub input: String,
    pub status: Status,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
}

impl ReportEntry {
    pub fn ok(input: impl Into<String>) -> Self {
        ReportEntry {
            input: input.into(),
            status: Status::Ok,
            error: None,
            warnings: Vec::new(),
            metrics: BTreeMap::new(),
            elapsed_ms: None,
        }
    }

    pub fn failed(input: impl Into<String>, error: String) -> Self {
        ReportEntry {
            status: Status::Failed,
            error: Some(error),
            ..ReportEntry::ok(input)
        }
    }

    pub fn metric(mut self, name: &str, value: f64) -> Self {
        self.metrics.insert(name.to_string(), value);
        self
    }
}

/// One entry per input, in input order, plus aggregate metrics.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub command: String,
    pub n_inputs: usize,
    pub n_ok: usize,
    pub n_failed: usize,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub metrics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<f64>,
    pub entries: Vec<ReportEntry>,
}

impl RunReport {
    pub fn new(command: &str, entries: Vec<ReportEntry>) -> Self {
        let n_failed = entries.iter().filter(|e| e.status == Status::Failed).count();
        let mut metrics = BTreeMap::new();
        // Average every per-entry metric over the entries that have it.
        let mut sums: BTreeMap<&str, (f64, usize)> = BTreeMap::new();
        for e in &entries {
            for (k, v) in &e.metrics {
                let s = sums.entry(k).or_default();
                s.0 += v;
                s.1 += 1;
            }
        }
        for (k, (sum, n)) in sums {
            metrics.insert(format!("mean_{k}"), sum / n as f64);
        }
        RunReport {
            command: command.to_string(),
            n_inputs: entries.len(),
            n_ok: entries.len() - n_failed,
            n_failed,
            metrics,
            elapsed_ms: None,
            entries,
        }
    }

    pub fn write(&self, path: &Path) -> CliResult<()> {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::io(path, e))
    }

    pub fn summary(&self) -> String {
        format!("{}: {} ok, {} failed", self.command, self.n_ok, self.n_failed)
    }
}
