//! Writing results: JSON to stdout, or files plus a checksummed manifest.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use coeffid_core::io::write_table;
use coeffid_core::ExperimentReport;
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Both,
}

impl Format {
    fn json(self) -> bool {
        self != Format::Csv
    }

    fn csv(self) -> bool {
        self != Format::Json
    }
}

/// A file-to-be, named relative to the output directory.
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

impl Artifact {
    fn is_csv(&self) -> bool {
        self.name.ends_with(".csv")
    }
}

/// What a subcommand produced: the primary JSON document, auxiliary files,
/// and whether every mathematical check held.
pub struct Outcome {
    pub json: String,
    pub stem: String,
    pub extra: Vec<Artifact>,
    pub passed: bool,
    pub summary: String,
}

impl Outcome {
    pub fn from_report(stem: &str, report: &ExperimentReport) -> Result<Self> {
        let mut extra = Vec::new();
        for (name, curve) in &report.curves {
            let cols: Vec<Vec<f64>> = (0..curve.columns.len())
                .map(|i| curve.rows.iter().map(|r| r[i]).collect())
                .collect();
            let header: Vec<&str> = curve.columns.iter().map(String::as_str).collect();
            extra.push(csv_artifact(format!("{stem}.{name}.csv"), &header, &cols)?);
        }
        let failed: Vec<&str> = report
            .metrics
            .iter()
            .filter(|(k, v)| k.starts_with("check.") && **v == 0.0)
            .map(|(k, _)| &k["check.".len()..])
            .collect();
        let summary = if report.passed {
            format!("{}: all checks passed", report.experiment)
        } else {
            format!(
                "{}: failed checks: {}",
                report.experiment,
                failed.join(", ")
            )
        };
        Ok(Self {
            json: report.to_json(),
            stem: stem.to_string(),
            extra,
            passed: report.passed,
            summary,
        })
    }
}

pub fn csv_artifact(name: String, header: &[&str], columns: &[Vec<f64>]) -> Result<Artifact> {
    let mut bytes = Vec::new();
    let slices: Vec<&[f64]> = columns.iter().map(Vec::as_slice).collect();
    write_table(&mut bytes, header, &slices)?;
    Ok(Artifact { name, bytes })
}

pub fn json_artifact(name: String, value: &impl Serialize) -> Result<Artifact> {
    Ok(Artifact {
        name,
        bytes: serde_json::to_vec_pretty(value)?,
    })
}

#[derive(Serialize)]
struct FileEntry {
    path: String,
    bytes: usize,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    core_version: &'static str,
    command: &'a str,
    args: &'a [String],
    threads: Option<usize>,
    passed: bool,
    inputs: Vec<FileEntry>,
    outputs: Vec<FileEntry>,
}

fn entry(path: String, bytes: &[u8]) -> FileEntry {
    FileEntry {
        path,
        bytes: bytes.len(),
        sha256: hex::encode(Sha256::digest(bytes)),
    }
}

pub struct RunInfo<'a> {
    pub command: &'a str,
    pub args: &'a [String],
    pub threads: Option<usize>,
    pub inputs: &'a [PathBuf],
}

/// Without `out`, prints the primary JSON to stdout. With `out`, writes the
/// selected artifacts and `manifest.json` there and prints the summary.
pub fn emit(outcome: &Outcome, out: Option<&Path>, format: Format, run: &RunInfo) -> Result<()> {
    let Some(dir) = out else {
        println!("{}", outcome.json);
        return Ok(());
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files: Vec<&Artifact> = Vec::new();
    let primary = Artifact {
        name: format!("{}.json", outcome.stem),
        bytes: outcome.json.clone().into_bytes(),
    };
    files.push(&primary);
    files.extend(outcome.extra.iter());
    let files: Vec<&Artifact> = files
        .into_iter()
        .filter(|a| {
            if a.is_csv() {
                format.csv()
            } else {
                format.json()
            }
        })
        .collect();

    let mut outputs = Vec::new();
    for a in &files {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.bytes).with_context(|| format!("writing {}", path.display()))?;
        outputs.push(entry(a.name.clone(), &a.bytes));
    }
    let mut inputs = Vec::new();
    for p in run.inputs {
        let bytes = std::fs::read(p).with_context(|| format!("re-reading {}", p.display()))?;
        inputs.push(entry(p.display().to_string(), &bytes));
    }
    let manifest = Manifest {
        tool: "coeffid",
        version: env!("CARGO_PKG_VERSION"),
        core_version: coeffid_core::VERSION,
        command: run.command,
        args: run.args,
        threads: run.threads,
        passed: outcome.passed,
        inputs,
        outputs,
    };
    std::fs::write(
        dir.join("manifest.json"),
        serde_json::to_vec_pretty(&manifest)?,
    )?;
    println!("{}", outcome.summary);
    for a in &files {
        println!("wrote {}", dir.join(&a.name).display());
    }
    Ok(())
}
