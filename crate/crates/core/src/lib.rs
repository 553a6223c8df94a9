//! Adversarial differential discriminators (ADD) for multi-objective
//! optimization.
//!
//! Instead of summing per-objective errors with hand-tuned weights, the
//! errors are stacked into a *differential vector* and a discriminator is
//! trained to tell the ideal solution (the zero vector, its only positive
//! sample) apart from the differentials the model actually produces. The
//! discriminator's score then serves as a learned, adaptive objective.
//!
//! Crate layout:
//!
//! - [`autodiff`]: tape-based reverse-mode AD with double backprop.
//! - [`nets`]: MLPs, the fixed-covariance Gaussian policy, the discriminator,
//!   SGD with momentum and the checkpoint format.
//! - [`add`]: differential vectors, the discriminator objective and its
//!   gradient-penalty variants, the learned reward, differential normalization.
//! - [`rl`]: rollouts, GAE(λ)/TD(λ) and PPO updates.
//! - [`envs`]: desk-scale tasks (regression, point-mass tracking,
//!   three-objective, steering).
//! - [`baselines`]: hand-designed rewards the learned reward is compared with.
//!
//! The numerical core is generic over [`Scalar`]; the aliases below fix it to
//! `f64`, which is what training uses.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod add;
pub mod autodiff;
pub mod baselines;
pub mod envs;
pub mod nets;
pub mod rl;
mod scalar;

pub use scalar::Scalar;

pub type Tensor = autodiff::Tensor<f64>;
pub type Graph = autodiff::Graph<f64>;
pub type Mlp = nets::Mlp<f64>;
pub type GaussianPolicy = nets::GaussianPolicy<f64>;
pub type Discriminator = nets::Discriminator<f64>;
pub type SgdMomentum = nets::SgdMomentum<f64>;

pub use add::{DeltaNormalizer, DifferentialVector, GpMode};
pub use autodiff::{AutodiffError, NodeId};
