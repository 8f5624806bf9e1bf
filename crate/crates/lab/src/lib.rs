//! Experiment runner for `rmlab-core`: TOML configuration, seeded parallel
//! trials and CSV/JSON outputs.

pub mod config;
pub mod experiment;
pub mod output;

use std::path::PathBuf;

use rmlab_core::ensembles::EnsembleError;
use rmlab_core::limitlaw::LimitError;
use rmlab_core::smallball::SmallBallError;
use rmlab_core::spectral::SpectralError;
use rmlab_core::truncation::TruncationError;
use rmlab_core::LinalgError;
use thiserror::Error;

pub use config::{ConfigError, ExperimentConfig, ExperimentKind};
pub use experiment::{lsv_experiment, run_experiment, stieltjes_compare, LsvReport, RunReport, StieltjesRow};

#[derive(Debug, Error)]
pub enum LabError {
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Limit(#[from] LimitError),
    #[error(transparent)]
    Truncation(#[from] TruncationError),
    #[error(transparent)]
    SmallBall(#[from] SmallBallError),
    #[error("{0}")]
    Usage(String),
}
