//! Experiment orchestration behind the `mcvd` command line.
//!
//! An experiment starts from its default parameters, applies overrides
//! (config file first, then `--set` pairs, then `--seed`), is validated,
//! runs, and finally writes its CSV tables and a `manifest.json` into the
//! output directory.

pub mod config;
pub mod csvio;
pub mod experiments;

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use config::{validate, ConfigFile, Diagnostic, Experiment, Params, Severity};
pub use csvio::{OutputRecord, Table};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub experiment: String,
    pub version: String,
    pub config: BTreeMap<String, String>,
    pub warnings: Vec<String>,
    pub wall_time_s: f64,
    pub outputs: Vec<OutputRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRequest {
    pub experiment: Experiment,
    pub overrides: Vec<(String, String)>,
    pub out_dir: PathBuf,
}

impl RunRequest {
    pub fn new(experiment: Experiment, out_dir: impl Into<PathBuf>) -> Self {
        Self {
            experiment,
            overrides: Vec::new(),
            out_dir: out_dir.into(),
        }
    }

    pub fn set(mut self, key: &str, value: impl ToString) -> Self {
        self.overrides.push((key.to_string(), value.to_string()));
        self
    }

    /// Effective parameters, rejecting unknown keys and invariant violations.
    pub fn params(&self) -> Result<(Params, Vec<Diagnostic>)> {
        let mut p = Params::defaults(self.experiment);
        for (k, v) in &self.overrides {
            p.set(k, v)?;
        }
        let diags = validate(self.experiment, &p);
        let errors: Vec<String> = diags
            .iter()
            .filter(|d| d.severity == Severity::Error)
            .map(|d| d.message.clone())
            .collect();
        if !errors.is_empty() {
            return Err(Error::config(errors.join("; ")));
        }
        Ok((p, diags))
    }
}

pub fn run(request: &RunRequest) -> Result<RunManifest> {
    let (params, diags) = request.params()?;
    let start = Instant::now();
    let tables = experiments::run_experiment(request.experiment, &params)?;
    let wall_time_s = start.elapsed().as_secs_f64();

    fs::create_dir_all(&request.out_dir)?;
    let mut outputs = Vec::new();
    for t in &tables {
        let bytes = t.to_bytes()?;
        fs::write(request.out_dir.join(&t.name), &bytes)?;
        outputs.push(OutputRecord {
            file: t.name.clone(),
            rows: t.rows.len(),
            sha256: csvio::sha256_hex(&bytes),
        });
    }
    let manifest = RunManifest {
        experiment: request.experiment.name().to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config: params.entries().into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        warnings: diags.iter().map(|d| d.message.clone()).collect(),
        wall_time_s,
        outputs,
    };
    write_manifest(&request.out_dir, &manifest)?;
    Ok(manifest)
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest)?;
    text.push('\n');
    fs::write(dir.join(MANIFEST_FILE), text)?;
    Ok(())
}

pub fn read_manifest(dir: &Path) -> Result<RunManifest> {
    Ok(serde_json::from_str(&fs::read_to_string(dir.join(MANIFEST_FILE))?)?)
}

/// Diagnostics for a configuration file; the experiment defaults to
/// `custom` when the file does not name one.
pub fn validate_file(path: &Path) -> Result<(Experiment, Vec<Diagnostic>)> {
    let file = ConfigFile::parse(&fs::read_to_string(path)?)?;
    let experiment = file.experiment.unwrap_or(Experiment::Custom);
    let mut p = Params::defaults(experiment);
    let mut diags = Vec::new();
    for (k, v) in &file.overrides {
        if let Err(e) = p.set(k, v) {
            diags.push(Diagnostic {
                severity: Severity::Error,
                message: match e {
                    Error::Config(m) => m,
                    other => other.to_string(),
                },
            });
        }
    }
    diags.extend(validate(experiment, &p));
    Ok((experiment, diags))
}
