//! Batch experiments driven by an [`ExperimentConfig`]: convergence
//! traces, sum-rate sweeps and interference-angle traces, each written as
//! CSV into the configured output directory.

pub mod config;
pub mod experiments;
pub mod output;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{ConfigParseError, ExperimentConfig, ExperimentKind, RateMode};
pub use experiments::{
    angle_runs, convergence_runs, rate_sweep, run_angle_experiment, run_convergence_experiment,
    run_rate_experiment, AngleReport, ConvergenceReport, RateReport, RunRecord,
};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigParseError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{0}")]
    Unsupported(String),
    #[error("cannot start worker pool: {0}")]
    ThreadPool(String),
}

/// Files written by one experiment.
pub fn run_experiment(
    kind: ExperimentKind,
    cfg: &ExperimentConfig,
) -> Result<Vec<PathBuf>, HarnessError> {
    Ok(match kind {
        ExperimentKind::Convergence => run_convergence_experiment(cfg)?.files,
        ExperimentKind::Rate => run_rate_experiment(cfg)?.files,
        ExperimentKind::Angle => run_angle_experiment(cfg)?.files,
    })
}
