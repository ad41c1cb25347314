//! Config-driven runner for the `flowibp` experiments.

pub mod config;
pub mod registry;
pub mod report;
pub mod run;

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

pub use config::{parse_config, ConfigFile, Diagnostic, DiagnosticKind, ExperimentConfig, OutputFormat};
pub use registry::Experiment;
pub use report::{write_report, COLUMNS};
pub use run::{run_experiment, ReportRow, RunOptions, Status};

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const FAIL: i32 = 1;
    pub const CONFIG: i32 = 2;
    pub const IO: i32 = 3;
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n"))]
    Config(Vec<Diagnostic>),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Pool(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => exit::CONFIG,
            CliError::Io { .. } | CliError::Pool(_) => exit::IO,
        }
    }
}

/// Result of a suite run.
#[derive(Clone, Debug, Default)]
pub struct SuiteOutcome {
    pub rows: Vec<ReportRow>,
}

impl SuiteOutcome {
    /// Exit code: 0 if no row failed or errored, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        if self.rows.iter().all(|r| matches!(r.status, Status::Pass | Status::Info)) {
            exit::PASS
        } else {
            exit::FAIL
        }
    }
}

/// Default seed: `FLOWIBP_SEED` when set and numeric, else [`config::DEFAULT_SEED`].
pub fn default_seed() -> Result<u64, CliError> {
    match std::env::var(config::SEED_ENV) {
        Err(_) => Ok(config::DEFAULT_SEED),
        Ok(s) => s.trim().parse().map_err(|_| {
            CliError::Config(vec![Diagnostic {
                line: 0,
                kind: DiagnosticKind::Parse,
                message: format!("{} = {s:?} is not an unsigned integer", config::SEED_ENV),
            }])
        }),
    }
}

pub fn load_config(path: &Path, default_seed: u64) -> Result<ConfigFile, CliError> {
    let text =
        std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.display().to_string(), source })?;
    parse_config(&text, default_seed).map_err(CliError::Config)
}

/// Runs experiments in order. Paths within an experiment use a rayon pool of
/// `jobs` workers (all cores when `None`); results do not depend on `jobs`.
pub fn run_suite(
    configs: &[ExperimentConfig],
    jobs: Option<usize>,
    options: &RunOptions,
    mut on_row: impl FnMut(&ReportRow),
) -> Result<SuiteOutcome, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        builder = builder.num_threads(n.max(1));
    }
    let pool = builder.build().map_err(|e| CliError::Pool(e.to_string()))?;
    let mut rows = Vec::with_capacity(configs.len());
    let mut cache = run::DerivativeCache::default();
    for cfg in configs {
        let row = pool.install(|| run::run_experiment_cached(cfg, options, &mut cache));
        on_row(&row);
        rows.push(row);
    }
    Ok(SuiteOutcome { rows })
}

/// Writes the report to `path`, or to stdout when `path` is `None` or `-`.
pub fn emit_report(rows: &[ReportRow], format: OutputFormat, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) if p != Path::new("-") => {
            let io = |source| CliError::Io { path: p.display().to_string(), source };
            let mut out = BufWriter::new(File::create(p).map_err(io)?);
            write_report(rows, format, &mut out).map_err(io)?;
            out.flush().map_err(io)
        }
        _ => {
            let stdout = std::io::stdout();
            let mut lock = stdout.lock();
            write_report(rows, format, &mut lock)
                .and_then(|_| lock.flush())
                .map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}
