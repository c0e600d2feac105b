//! Machine-readable experiment records.
//!
//! Maps are `BTreeMap`s so the serialized field order is fixed; together with
//! deterministic computation this makes reports byte-reproducible.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::Result;
use crate::io::write_table_file;

/// A named numeric table, written as CSV for plotting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Curve {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Curve {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let cols: Vec<Vec<f64>> = (0..self.columns.len())
            .map(|i| self.rows.iter().map(|r| r[i]).collect())
            .collect();
        let header: Vec<&str> = self.columns.iter().map(String::as_str).collect();
        let slices: Vec<&[f64]> = cols.iter().map(Vec::as_slice).collect();
        write_table_file(path, &header, &slices)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: String,
    pub passed: bool,
    pub inputs: BTreeMap<String, Value>,
    pub metrics: BTreeMap<String, f64>,
    pub curves: BTreeMap<String, Curve>,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(experiment: impl Into<String>) -> Self {
        Self {
            experiment: experiment.into(),
            passed: true,
            inputs: BTreeMap::new(),
            metrics: BTreeMap::new(),
            curves: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn input(&mut self, key: &str, value: impl Serialize) -> &mut Self {
        let v = serde_json::to_value(value).unwrap_or(Value::Null);
        self.inputs.insert(key.to_string(), v);
        self
    }

    pub fn metric(&mut self, key: &str, value: f64) -> &mut Self {
        self.metrics.insert(key.to_string(), value);
        self
    }

    pub fn curve(&mut self, key: &str, curve: Curve) -> &mut Self {
        self.curves.insert(key.to_string(), curve);
        self
    }

    pub fn note(&mut self, note: impl Into<String>) -> &mut Self {
        self.notes.push(note.into());
        self
    }

    /// Records a named check; any failed check fails the report.
    pub fn check(&mut self, name: &str, ok: bool) -> &mut Self {
        self.metrics
            .insert(format!("check.{name}"), if ok { 1.0 } else { 0.0 });
        if !ok {
            self.passed = false;
            self.notes.push(format!("check failed: {name}"));
        }
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    /// Writes `<stem>.json` plus one `<stem>.<curve>.csv` per curve into `dir`
    /// and returns the written paths.
    pub fn write(
        &self,
        dir: &Path,
        stem: &str,
        json: bool,
        csv: bool,
    ) -> Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        if json {
            let p = dir.join(format!("{stem}.json"));
            std::fs::write(&p, self.to_json())?;
            written.push(p);
        }
        if csv {
            for (name, c) in &self.curves {
                let p = dir.join(format!("{stem}.{name}.csv"));
                c.write_csv(&p)?;
                written.push(p);
            }
        }
        Ok(written)
    }
}
