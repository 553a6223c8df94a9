use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::add::{DeltaNormalizer, DeltaScale, GpMode};
use crate::envs::Env;
use crate::nets::{Activation, Discriminator, GaussianPolicy, Mlp};
use crate::rl::{
    collect, evaluate_policy, ppo_update, CollectSpec, EvalReport, Learner, PpoConfig, RewardModel, RlError,
    TrajectoryBuffer, UpdateStats,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RewardSource {
    /// Learned reward from the discriminator.
    Add,
    /// The task's hand-designed reward.
    Manual,
}

impl RewardSource {
    pub fn as_str(self) -> &'static str {
        match self {
            RewardSource::Add => "add",
            RewardSource::Manual => "manual",
        }
    }
}

impl std::str::FromStr for RewardSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "add" => Ok(RewardSource::Add),
            "manual" => Ok(RewardSource::Manual),
            _ => Err(format!("unknown reward source `{s}` (expected add or manual)")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub ppo: PpoConfig,
    /// Trajectories per iteration.
    pub trajectories: usize,
    pub horizon: usize,
    pub workers: usize,
    pub terminate_on_failure: bool,
    pub reward_source: RewardSource,
    pub gp_mode: GpMode,
    pub lambda_gp: f64,
    pub policy_hidden: Vec<usize>,
    pub value_hidden: Vec<usize>,
    pub disc_hidden: Vec<usize>,
    pub activation: Activation,
    pub policy_sigma: f64,
    pub normalize_delta: bool,
    pub delta_scale: DeltaScale,
    pub normalizer_freeze_after: Option<u64>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            ppo: PpoConfig::default(),
            trajectories: 16,
            horizon: 150,
            workers: 1,
            terminate_on_failure: true,
            reward_source: RewardSource::Add,
            gp_mode: GpMode::Neg,
            lambda_gp: 1.0,
            policy_hidden: vec![32, 32],
            value_hidden: vec![32, 32],
            disc_hidden: vec![32, 32],
            activation: Activation::Tanh,
            policy_sigma: 1.0,
            normalize_delta: true,
            delta_scale: DeltaScale::Std,
            normalizer_freeze_after: Some(20),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), RlError> {
        self.ppo.validate()?;
        if self.trajectories == 0 || self.horizon == 0 || self.workers == 0 {
            return Err(RlError::InvalidConfig("trajectories, horizon and workers must be positive".into()));
        }
        if !(self.policy_sigma > 0.0) || !(self.lambda_gp >= 0.0) {
            return Err(RlError::InvalidConfig("policy_sigma must be positive and lambda_gp non-negative".into()));
        }
        Ok(())
    }

    /// Critic outputs are `value_scale * V`, which keeps regression targets
    /// near unit scale when rewards are bounded.
    pub fn value_scale(&self) -> f64 {
        if self.ppo.gamma < 1.0 {
            1.0 - self.ppo.gamma
        } else {
            1.0
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub iteration: u64,
    /// Environment steps so far, this iteration included.
    pub samples: u64,
    pub episodes: usize,
    pub terminated_episodes: usize,
    /// Mean per-episode sum of the training reward.
    pub mean_return: f64,
    /// Mean per-episode sum of the hand-designed reward.
    pub manual_return: f64,
    pub tracking_error: Option<f64>,
    pub objective_errors: Vec<f64>,
    pub update: UpdateStats,
}

fn layers(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut v = Vec::with_capacity(hidden.len() + 2);
    v.push(input);
    v.extend_from_slice(hidden);
    v.push(output);
    v
}

/// Outer loop: collect, refresh the normalizer, update.
#[derive(Clone, Debug)]
pub struct Trainer<E> {
    env: E,
    cfg: TrainConfig,
    learner: Learner,
    rng: ChaCha8Rng,
    iteration: u64,
    samples: u64,
}

impl<E: Env + Clone> Trainer<E> {
    pub fn new(env: E, cfg: TrainConfig) -> Result<Self, RlError> {
        cfg.validate()?;
        let (o, a) = (env.obs_dim(), env.action_dim());
        let k = env.delta_layout().len();
        let mean = Mlp::new(&layers(o, &cfg.policy_hidden, a), cfg.activation, cfg.seed.wrapping_mul(4).wrapping_add(1))?;
        let policy = GaussianPolicy::new(mean, vec![cfg.policy_sigma; a])?;
        let critic = Mlp::new(&layers(o, &cfg.value_hidden, 1), cfg.activation, cfg.seed.wrapping_mul(4).wrapping_add(2))?;
        let disc = match cfg.reward_source {
            RewardSource::Add => Some(Discriminator::new(Mlp::new(
                &layers(k, &cfg.disc_hidden, 1),
                cfg.activation,
                cfg.seed.wrapping_mul(4).wrapping_add(3),
            )?)?),
            RewardSource::Manual => None,
        };
        let normalizer = if cfg.normalize_delta {
            DeltaNormalizer::new(k)
                .with_freeze_after(cfg.normalizer_freeze_after)
                .with_scale(cfg.delta_scale)
        } else {
            DeltaNormalizer::identity(k)
        }
        .with_amplification(env.delta_amplification())?;
        let learner = Learner::new(policy, critic, disc, normalizer, cfg.value_scale(), cfg.gp_mode, cfg.lambda_gp, &cfg.ppo)?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(cfg.seed),
            env,
            cfg,
            learner,
            iteration: 0,
            samples: 0,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.cfg
    }

    pub fn env(&self) -> &E {
        &self.env
    }

    pub fn learner(&self) -> &Learner {
        &self.learner
    }

    pub fn learner_mut(&mut self) -> &mut Learner {
        &mut self.learner
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn samples(&self) -> u64 {
        self.samples
    }

    /// Collects one buffer with the current policy and reward.
    pub fn collect(&mut self) -> Result<TrajectoryBuffer, RlError> {
        let spec = CollectSpec {
            trajectories: self.cfg.trajectories,
            horizon: self.cfg.horizon,
            terminate_on_failure: self.cfg.terminate_on_failure,
            workers: self.cfg.workers,
            seed: self.rng.next_u64(),
            iteration: self.iteration,
        };
        let l = &self.learner;
        let reward = match &l.disc {
            Some(d) => RewardModel::Add {
                disc: d,
                normalizer: &l.normalizer,
            },
            None => RewardModel::Manual,
        };
        collect(&self.env, &l.policy, &l.critic, l.value_scale, &reward, &spec)
    }

    pub fn iterate(&mut self) -> Result<IterationRecord, RlError> {
        let buffer = self.collect()?;
        if self.learner.disc.is_some() {
            self.learner.normalizer.update(&buffer.deltas())?;
        }
        let update = ppo_update(&mut self.learner, &buffer, &self.cfg.ppo, &mut self.rng)?;
        self.samples += buffer.len() as u64;
        let n = buffer.episodes.len().max(1) as f64;
        let record = IterationRecord {
            iteration: self.iteration,
            samples: self.samples,
            episodes: buffer.episodes.len(),
            terminated_episodes: buffer.episodes.iter().filter(|e| e.terminated()).count(),
            mean_return: buffer.mean_episode_return(),
            manual_return: buffer.episodes.iter().map(|e| e.manual_return).sum::<f64>() / n,
            tracking_error: buffer.mean_tracking_error(),
            objective_errors: buffer.mean_objective_errors(),
            update,
        };
        self.iteration += 1;
        Ok(record)
    }

    pub fn evaluate(&self, episodes: usize, horizon: usize, seed: u64) -> Result<EvalReport, RlError> {
        evaluate_policy(&self.env, &self.learner.policy, episodes, horizon, seed)
    }
}
