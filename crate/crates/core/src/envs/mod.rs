//! Desk-scale tasks: a didactic regression problem, reference tracking with a
//! point mass, a three-objective point-mass task and tracking with a steering
//! objective appended.

mod point_mass;
mod reference;
pub mod regression;
mod steering;
mod tri_objective;

pub use point_mass::{
    double_integrator, oracle_action, PointMassConfig, PointMassState, PointMassTrackEnv,
    TRACKING_LABELS,
};
pub use reference::{Reference, ReferenceKind};
pub use regression::{regression_train, RegressionHyper, RegressionObjective, RegressionOutcome, RegressionTask};
pub use steering::{steering_augment, SteeringConfig, SteeringEnv, SteeringTarget};
pub use tri_objective::{tri_objective_delta, TriObjectiveConfig, TriObjectiveEnv, TriObjectiveTargets};

use std::sync::Arc;

use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::add::{AddError, FeatureLayout};
use crate::autodiff::AutodiffError;
use crate::baselines::BaselineError;
use crate::nets::NetsError;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid environment config: {0}")]
    InvalidConfig(String),
    #[error("{what}: expected dimension {expected}, got {got}")]
    Dimension {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite {0}")]
    NonFinite(&'static str),
    #[error("training diverged: {0}")]
    Divergence(String),
    #[error(transparent)]
    Add(#[from] AddError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Nets(#[from] NetsError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}

/// Outcome of one environment step.
#[derive(Clone, Debug, PartialEq)]
pub struct Step {
    pub obs: Vec<f64>,
    /// Raw (unnormalized) differential `target ⊖ achieved` after the step.
    pub delta: Vec<f64>,
    /// The task's hand-designed reward for this step.
    pub manual_reward: f64,
    /// Task-specific failure; whether it ends the episode is up to the caller.
    pub failed: bool,
    /// Position tracking error, for tasks with a reference.
    pub tracking_error: Option<f64>,
    /// One error magnitude per task objective, see [`Env::objective_names`].
    pub objective_errors: Vec<f64>,
}

/// An episodic control task exposing a differential vector every step.
pub trait Env: Send {
    fn obs_dim(&self) -> usize;
    fn action_dim(&self) -> usize;
    fn delta_layout(&self) -> Arc<FeatureLayout>;
    /// Per-dimension amplification applied after differential normalization.
    fn delta_amplification(&self) -> Vec<f64> {
        vec![1.0; self.delta_layout().len()]
    }
    fn objective_names(&self) -> Vec<&'static str>;
    /// Samples an initial state; returns the first observation.
    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Vec<f64>;
    fn step(&mut self, action: &[f64]) -> Result<Step, EnvError>;
}

/// Root position and joint positions of a pose.
#[derive(Clone, Debug, PartialEq)]
pub struct Pose {
    pub root: Vec<f64>,
    pub joints: Vec<Vec<f64>>,
}

impl Pose {
    pub fn root_only(root: &[f64]) -> Self {
        Self {
            root: root.to_vec(),
            joints: Vec::new(),
        }
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Mean of the root position error and the root-relative joint position
/// errors. With no joints this is the root distance.
pub fn position_tracking_error(agent: &Pose, reference: &Pose) -> Result<f64, EnvError> {
    if agent.joints.len() != reference.joints.len() {
        return Err(EnvError::Dimension {
            what: "joint count",
            expected: reference.joints.len(),
            got: agent.joints.len(),
        });
    }
    let dim = reference.root.len();
    let dims_ok = agent.root.len() == dim
        && agent.joints.iter().chain(&reference.joints).all(|j| j.len() == dim);
    if !dims_ok {
        return Err(EnvError::Dimension {
            what: "position",
            expected: dim,
            got: agent.root.len(),
        });
    }
    let mut total = distance(&reference.root, &agent.root);
    for (a, r) in agent.joints.iter().zip(&reference.joints) {
        let rel_r: Vec<f64> = r.iter().zip(&reference.root).map(|(x, o)| x - o).collect();
        let rel_a: Vec<f64> = a.iter().zip(&agent.root).map(|(x, o)| x - o).collect();
        total += distance(&rel_r, &rel_a);
    }
    Ok(total / (reference.joints.len() + 1) as f64)
}

pub(crate) fn check_action(action: &[f64], dim: usize) -> Result<(), EnvError> {
    if action.len() != dim {
        return Err(EnvError::Dimension {
            what: "action",
            expected: dim,
            got: action.len(),
        });
    }
    if action.iter().any(|a| !a.is_finite()) {
        return Err(EnvError::NonFinite("action"));
    }
    Ok(())
}
