//! Command-line front end of vdwlab: configuration, command dispatch and
//! report files.

pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;

use serde_json::Value;
use thiserror::Error;

pub use config::{Command, RawConfig, RunConfig, DEFAULT_SEED};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("computation failed: {0}")]
    Computation(String),
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Computation(_) | CliError::Io { .. } => 3,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Computation(_) => "computation",
            CliError::Io { .. } => "io",
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub summary: Value,
    /// Exact bytes written to the summary file.
    pub summary_json: String,
    pub summary_path: PathBuf,
    pub csv_path: PathBuf,
    pub dump_paths: Vec<PathBuf>,
    pub passed: bool,
}

impl RunOutput {
    /// Process exit status: verification commands fail on any failed check.
    pub fn exit_code(&self, command: Command) -> i32 {
        if command.is_verification() && !self.passed {
            3
        } else {
            0
        }
    }
}

fn write_file(path: &std::path::Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

/// Runs one command and writes its summary, table and dumps.
pub fn run(config: &RunConfig) -> Result<RunOutput, CliError> {
    config.validate()?;
    let out = commands::execute(config)?;
    let summary = report::summary_value(config, &out.checks, &out.results);
    let summary_json = report::to_json_string(&summary)?;
    let (summary_path, csv_path) = report::output_paths(config);
    std::fs::create_dir_all(&config.output_dir)
        .map_err(|source| CliError::Io { path: config.output_dir.clone(), source })?;
    write_file(&summary_path, summary_json.as_bytes())?;
    write_file(&csv_path, out.table.to_csv()?.as_bytes())?;
    let mut dump_paths = Vec::with_capacity(out.dumps.len());
    for (suffix, wf) in &out.dumps {
        let path = config.output_dir.join(format!("{}.{suffix}", config.name));
        let mut bytes = Vec::new();
        wf.write_dump(&mut bytes).map_err(|e| CliError::Computation(e.to_string()))?;
        write_file(&path, &bytes)?;
        dump_paths.push(path);
    }
    let passed = summary["passed"].as_bool().unwrap_or(false);
    Ok(RunOutput { summary, summary_json, summary_path, csv_path, dump_paths, passed })
}
