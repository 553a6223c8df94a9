//! On-policy training: rollouts, GAE(λ) advantages, TD(λ) value targets and
//! clipped PPO updates, with the discriminator stepped alongside.

mod buffer;
mod collect;
mod ppo;
mod returns;
mod train;

pub use buffer::{Episode, TrajectoryBuffer, Transition};
pub use collect::{collect, evaluate_policy, evaluate_with, CollectSpec, EvalReport, MeanStd, RewardModel};
pub use ppo::{ppo_policy_loss, ppo_update, Learner, PositiveCounter, PpoConfig, UpdateStats};
pub use returns::{gae, td_lambda_targets};
pub use train::{IterationRecord, RewardSource, TrainConfig, Trainer};

use thiserror::Error;

use crate::add::AddError;
use crate::autodiff::AutodiffError;
use crate::envs::EnvError;
use crate::nets::NetsError;

#[derive(Debug, Error)]
pub enum RlError {
    #[error("segment lengths differ: {rewards} rewards, {values} values, {dones} done flags")]
    LengthMismatch { rewards: usize, values: usize, dones: usize },
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("{what}: expected dimension {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("empty trajectory buffer")]
    EmptyBuffer,
    #[error("training diverged: {0}")]
    Divergence(String),
    #[error(transparent)]
    Env(#[from] EnvError),
    #[error(transparent)]
    Add(#[from] AddError),
    #[error(transparent)]
    Nets(#[from] NetsError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}

impl RlError {
    pub fn is_divergence(&self) -> bool {
        fn nets(e: &NetsError) -> bool {
            matches!(e, NetsError::Autodiff(AutodiffError::NonFinite { .. }))
        }
        match self {
            RlError::Divergence(_) => true,
            RlError::Env(EnvError::Divergence(_) | EnvError::NonFinite(_)) => true,
            RlError::Add(AddError::NonFinite | AddError::Autodiff(AutodiffError::NonFinite { .. })) => true,
            RlError::Add(AddError::Nets(e)) | RlError::Nets(e) => nets(e),
            RlError::Autodiff(AutodiffError::NonFinite { .. }) => true,
            _ => false,
        }
    }
}
