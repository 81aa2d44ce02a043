//! Training/evaluation harness: experiment configuration, sweep execution,
//! order statistics, and all file formats behind the `spinmag` CLI.

pub mod config;
pub mod report;
pub mod stats;
pub mod sweeps;

use thiserror::Error;

pub use config::ExperimentConfig;
pub use report::{emit_report, Manifest};
pub use sweeps::{InitialStateMode, RunCheckpoint, SweepPoint, SweepResult};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Spin(#[from] crate::spin::SpinError),
    #[error(transparent)]
    Dynamics(#[from] crate::dynamics::DynamicsError),
    #[error(transparent)]
    Metrology(#[from] crate::metrology::MetrologyError),
    #[error(transparent)]
    Baseline(#[from] crate::baselines::BaselineError),
    #[error(transparent)]
    Neural(#[from] crate::neural::NeuralError),
    #[error(transparent)]
    Sac(#[from] crate::sac::SacError),
    #[error(transparent)]
    Env(#[from] crate::env::EnvError),
    #[error(transparent)]
    Checkpoint(#[from] crate::checkpoint::CheckpointError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("config parse error: {0}")]
    TomlParse(#[from] toml::de::Error),
    #[error("config write error: {0}")]
    TomlWrite(#[from] toml::ser::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
