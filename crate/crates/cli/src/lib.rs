//! Experiment harness for `advdiff`: config-driven training runs, evaluation
//! of saved policies, ablation grids and learning-curve export.
//!
//! A run directory holds `config.toml` (enough to reproduce the run),
//! `metrics.jsonl` (one record per iteration), `timing.jsonl` (wall time,
//! kept apart so metrics stay bit-identical across reruns), `checkpoints/`,
//! `curves/` and `report.json`.

pub mod ablate;
pub mod config;
pub mod curves;
pub mod evaluate;
pub mod run;

pub use ablate::{ablate, AblationResult, AblationRow, AblationSummary};
pub use config::{AblationAxis, EvalConfig, ExperimentConfig, RewardKind, TaskKind};
pub use curves::export_curves;
pub use evaluate::{evaluate_checkpoint, oracle_report};
pub use run::{run, MetricsRecord, RegressionReport, RunReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numeric divergence: {0}")]
    Divergence(String),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Run(String),
}

impl CliError {
    /// 2 for config errors, 3 for divergence, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Divergence(_) => 3,
            CliError::Io(_) | CliError::Run(_) => 1,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl From<advdiff::rl::RlError> for CliError {
    fn from(e: advdiff::rl::RlError) -> Self {
        match &e {
            _ if e.is_divergence() => CliError::Divergence(e.to_string()),
            advdiff::rl::RlError::InvalidConfig(m) => CliError::Config(m.clone()),
            _ => CliError::Run(e.to_string()),
        }
    }
}

impl From<advdiff::envs::EnvError> for CliError {
    fn from(e: advdiff::envs::EnvError) -> Self {
        use advdiff::envs::EnvError;
        match &e {
            EnvError::Divergence(_) | EnvError::NonFinite(_) => CliError::Divergence(e.to_string()),
            EnvError::InvalidConfig(m) => CliError::Config(m.clone()),
            _ => CliError::Run(e.to_string()),
        }
    }
}

impl From<advdiff::nets::NetsError> for CliError {
    fn from(e: advdiff::nets::NetsError) -> Self {
        CliError::Run(e.to_string())
    }
}
