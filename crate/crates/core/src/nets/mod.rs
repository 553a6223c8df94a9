//! Networks used by the policy, the value function and the discriminator.

pub mod checkpoint;
mod discriminator;
mod mlp;
mod optim;
mod policy;

pub use discriminator::{Discriminator, SCORE_EPS};
pub use mlp::{Activation, BoundMlp, Mlp};
pub use optim::{clip_grad_norm, Adam, SgdMomentum};
pub use policy::GaussianPolicy;

use thiserror::Error;

use crate::autodiff::AutodiffError;

#[derive(Debug, Error)]
pub enum NetsError {
    #[error("{what}: expected dimension {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("an MLP needs an input and an output layer, got {0} sizes")]
    TooFewLayers(usize),
    #[error("layer sizes must be positive")]
    ZeroWidth,
    #[error("policy standard deviations must be positive and finite")]
    InvalidSigma,
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
