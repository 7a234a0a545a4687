//! Sweep harness around `rabisim`: experiment configs, worker pool, and
//! CSV/JSON output.

use std::fmt;
use std::path::{Path, PathBuf};

pub mod config;
pub mod experiments;
pub mod output;
pub mod tools;

pub use config::{ConfigError, Experiment, ExperimentConfig};

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Numerical(String),
    Io(String),
}

impl CliError {
    /// 2 for configuration and input errors, 3 for numerical failures, 1 for
    /// I/O while writing results.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "config error: {e}"),
            CliError::Numerical(e) => write!(f, "numerical failure: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

impl From<rabisim::Error> for CliError {
    fn from(e: rabisim::Error) -> Self {
        CliError::Numerical(e.to_string())
    }
}

/// Runs an experiment on `workers` threads (0 = all cores) and writes its
/// outputs to `out`.
pub fn run(cfg: &ExperimentConfig, out: &Path, workers: usize) -> Result<Vec<PathBuf>, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Io(e.to_string()))?;
    let outputs = pool.install(|| experiments::run_experiment(cfg))?;
    let ctx = output::RunContext {
        experiment: cfg.experiment.name().into(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
    };
    let config = serde_json::to_value(cfg).expect("config serializes");
    output::write_outputs(out, &ctx, &outputs, &config).map_err(|e| CliError::Io(e.to_string()))
}
