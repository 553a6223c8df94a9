use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::add::{disc_loss, DeltaNormalizer, GpMode};
use crate::autodiff::{Graph, NodeId, Tensor};
use crate::nets::{clip_grad_norm, Discriminator, GaussianPolicy, Mlp, SgdMomentum};
use crate::rl::{RlError, TrajectoryBuffer};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PpoConfig {
    pub clip: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub td_lambda: f64,
    pub minibatch_size: usize,
    /// Passes over the buffer per iteration.
    pub epochs: usize,
    pub policy_lr: f64,
    pub value_lr: f64,
    pub disc_lr: f64,
    pub momentum: f64,
    /// Joint gradient-norm bound per network and step; `None` disables clipping.
    pub max_grad_norm: Option<f64>,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip: 0.2,
            gamma: 0.99,
            gae_lambda: 0.95,
            td_lambda: 0.95,
            minibatch_size: 256,
            epochs: 4,
            policy_lr: 1e-2,
            value_lr: 1e-2,
            disc_lr: 1e-2,
            momentum: 0.9,
            max_grad_norm: Some(1.0),
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<(), RlError> {
        let bad = |m: &str| Err(RlError::InvalidConfig(m.to_string()));
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma must lie in (0, 1]");
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) || !(0.0..=1.0).contains(&self.td_lambda) {
            return bad("lambda must lie in [0, 1]");
        }
        if !(self.clip > 0.0) {
            return bad("clip threshold must be positive");
        }
        if self.minibatch_size == 0 || self.epochs == 0 {
            return bad("minibatch size and epochs must be positive");
        }
        for lr in [self.policy_lr, self.value_lr, self.disc_lr] {
            if !(lr > 0.0) || !lr.is_finite() {
                return bad("learning rates must be positive");
            }
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum must lie in [0, 1)");
        }
        if let Some(c) = self.max_grad_norm {
            if !(c > 0.0) {
                return bad("max_grad_norm must be positive");
            }
        }
        Ok(())
    }
}

/// Counts positive samples seen by the discriminator objective.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PositiveCounter {
    pub updates: u64,
    pub positives: u64,
    pub min_per_update: Option<usize>,
    pub max_per_update: Option<usize>,
}

impl PositiveCounter {
    pub fn record(&mut self, rows: usize) {
        self.updates += 1;
        self.positives += rows as u64;
        self.min_per_update = Some(self.min_per_update.map_or(rows, |m| m.min(rows)));
        self.max_per_update = Some(self.max_per_update.map_or(rows, |m| m.max(rows)));
    }

    /// Every update so far used exactly one positive.
    pub fn exactly_one_each(&self) -> bool {
        self.updates > 0
            && self.positives == self.updates
            && self.min_per_update == Some(1)
            && self.max_per_update == Some(1)
    }
}

/// Policy, critic and (for the learned reward) discriminator with their
/// optimizers.
#[derive(Clone, Debug)]
pub struct Learner {
    pub policy: GaussianPolicy<f64>,
    /// Predicts `value_scale * V(s)`.
    pub critic: Mlp<f64>,
    pub disc: Option<Discriminator<f64>>,
    pub normalizer: DeltaNormalizer,
    pub value_scale: f64,
    pub gp_mode: GpMode,
    pub lambda_gp: f64,
    pub positives: PositiveCounter,
    policy_opt: SgdMomentum<f64>,
    critic_opt: SgdMomentum<f64>,
    disc_opt: SgdMomentum<f64>,
}

impl Learner {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        policy: GaussianPolicy<f64>,
        critic: Mlp<f64>,
        disc: Option<Discriminator<f64>>,
        normalizer: DeltaNormalizer,
        value_scale: f64,
        gp_mode: GpMode,
        lambda_gp: f64,
        cfg: &PpoConfig,
    ) -> Result<Self, RlError> {
        cfg.validate()?;
        if !(value_scale > 0.0) {
            return Err(RlError::InvalidConfig("value_scale must be positive".into()));
        }
        if !(lambda_gp >= 0.0) {
            return Err(RlError::InvalidConfig("lambda_gp must be non-negative".into()));
        }
        Ok(Self {
            policy,
            critic,
            disc,
            normalizer,
            value_scale,
            gp_mode,
            lambda_gp,
            positives: PositiveCounter::default(),
            policy_opt: SgdMomentum::new(cfg.policy_lr, cfg.momentum),
            critic_opt: SgdMomentum::new(cfg.value_lr, cfg.momentum),
            disc_opt: SgdMomentum::new(cfg.disc_lr, cfg.momentum),
        })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub clip_fraction: f64,
    pub approx_kl: f64,
    pub disc_loss: Option<f64>,
    pub disc_penalty: Option<f64>,
    /// Mean `D(0)` over updates.
    pub d_positive: Option<f64>,
    /// Mean `D(delta)` over the negatives of each update.
    pub d_negative: Option<f64>,
    pub minibatches: usize,
}

/// The clipped surrogate, `-mean(min(rho A, clip(rho, 1 - eps, 1 + eps) A))`,
/// on its own graph. Returns the graph, the policy parameter nodes, the loss
/// node and the ratio node (`[B, 1]`).
pub fn ppo_policy_loss(
    policy: &GaussianPolicy<f64>,
    obs: &Tensor<f64>,
    actions: &Tensor<f64>,
    old_log_probs: &[f64],
    advantages: &[f64],
    clip: f64,
) -> Result<(Graph<f64>, Vec<NodeId>, NodeId, NodeId), RlError> {
    let b = obs.rows();
    let mut g = Graph::new();
    let bound = policy.mean_net().bind(&mut g)?;
    let x = g.input(obs.clone())?;
    let logp = policy.log_prob_graph(&mut g, &bound, x, actions)?;
    let old = g.constant(Tensor::matrix(b, 1, old_log_probs.to_vec())?)?;
    let adv = g.constant(Tensor::matrix(b, 1, advantages.to_vec())?)?;
    let diff = g.sub(logp, old)?;
    let ratio = g.exp(diff)?;
    let s1 = g.mul(ratio, adv)?;
    let clipped = g.clamp(ratio, 1.0 - clip, 1.0 + clip)?;
    let s2 = g.mul(clipped, adv)?;
    let m = g.minimum(s1, s2)?;
    let mean = g.mean(m)?;
    let loss = g.neg(mean)?;
    Ok((g, bound.params().to_vec(), loss, ratio))
}

fn grads_of(g: &mut Graph<f64>, loss: NodeId, params: &[NodeId]) -> Result<Vec<Tensor<f64>>, RlError> {
    let ids = g.gradient(loss, params)?;
    Ok(ids.iter().map(|&id| g.value(id).clone()).collect())
}

fn clip(grads: &mut [Tensor<f64>], max: Option<f64>) {
    if let Some(m) = max {
        clip_grad_norm(grads, m);
    }
}

fn normalized(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt() + 1e-8;
    values.iter().map(|v| (v - mean) / std).collect()
}

/// One PPO update on a full buffer: per minibatch the discriminator steps
/// first, then the policy, then the critic.
pub fn ppo_update<R: Rng + ?Sized>(
    learner: &mut Learner,
    buffer: &TrajectoryBuffer,
    cfg: &PpoConfig,
    rng: &mut R,
) -> Result<UpdateStats, RlError> {
    cfg.validate()?;
    if buffer.is_empty() {
        return Err(RlError::EmptyBuffer);
    }
    let (adv, targets) = buffer.advantages_and_targets(cfg.gamma, cfg.gae_lambda, cfg.td_lambda)?;
    let transitions: Vec<_> = buffer.transitions().collect();
    let n = transitions.len();
    let obs_dim = transitions[0].obs.len();
    let act_dim = transitions[0].action.len();
    let deltas: Vec<Vec<f64>> = if learner.disc.is_some() {
        transitions
            .iter()
            .map(|t| learner.normalizer.normalize_values(&t.delta))
            .collect::<Result<_, _>>()?
    } else {
        Vec::new()
    };

    let mut stats = UpdateStats::default();
    let (mut dl, mut dp, mut d0, mut dn) = (0.0, 0.0, 0.0, 0.0);
    let mut idx: Vec<usize> = (0..n).collect();
    for _ in 0..cfg.epochs {
        idx.shuffle(rng);
        for chunk in idx.chunks(cfg.minibatch_size) {
            let b = chunk.len();
            stats.minibatches += 1;

            if let Some(d) = learner.disc.as_mut() {
                let negs: Vec<&[f64]> = chunk.iter().map(|&i| deltas[i].as_slice()).collect();
                let mut obj = disc_loss(d, &negs, learner.gp_mode, learner.lambda_gp, rng)?;
                learner.positives.record(obj.positive_rows);
                let s = obj.stats();
                let mut grads = obj.gradients()?;
                clip(&mut grads, cfg.max_grad_norm);
                learner.disc_opt.step(d.net_mut(), &grads)?;
                dl += s.loss;
                dp += s.penalty;
                d0 += s.d_positive;
                dn += s.d_negative_mean;
            }

            let mut obs = Vec::with_capacity(b * obs_dim);
            let mut act = Vec::with_capacity(b * act_dim);
            let mut old = Vec::with_capacity(b);
            let mut a = Vec::with_capacity(b);
            let mut tgt = Vec::with_capacity(b);
            for &i in chunk {
                obs.extend_from_slice(&transitions[i].obs);
                act.extend_from_slice(&transitions[i].action);
                old.push(transitions[i].log_prob);
                a.push(adv[i]);
                tgt.push(targets[i] * learner.value_scale);
            }
            let obs = Tensor::matrix(b, obs_dim, obs)?;
            let act = Tensor::matrix(b, act_dim, act)?;
            let a = normalized(&a);

            let (mut g, params, loss, ratio) = ppo_policy_loss(&learner.policy, &obs, &act, &old, &a, cfg.clip)?;
            stats.policy_loss += g.scalar(loss)?;
            let r = g.value(ratio).data();
            stats.clip_fraction += r.iter().filter(|x| (**x - 1.0).abs() > cfg.clip).count() as f64 / b as f64;
            stats.approx_kl += r.iter().map(|x| -x.ln()).sum::<f64>() / b as f64;
            let mut grads = grads_of(&mut g, loss, &params)?;
            clip(&mut grads, cfg.max_grad_norm);
            learner.policy_opt.step(learner.policy.mean_net_mut(), &grads)?;

            let mut g = Graph::new();
            let bound = learner.critic.bind(&mut g)?;
            let x = g.input(obs)?;
            let v = bound.apply(&mut g, x)?;
            let t = g.constant(Tensor::matrix(b, 1, tgt)?)?;
            let e = g.sub(v, t)?;
            let e2 = g.square(e)?;
            let vloss = g.mean(e2)?;
            stats.value_loss += g.scalar(vloss)?;
            let mut grads = grads_of(&mut g, vloss, bound.params())?;
            clip(&mut grads, cfg.max_grad_norm);
            learner.critic_opt.step(&mut learner.critic, &grads)?;
        }
    }
    let m = stats.minibatches as f64;
    stats.policy_loss /= m;
    stats.value_loss /= m;
    stats.clip_fraction /= m;
    stats.approx_kl /= m;
    if learner.disc.is_some() {
        stats.disc_loss = Some(dl / m);
        stats.disc_penalty = Some(dp / m);
        stats.d_positive = Some(d0 / m);
        stats.d_negative = Some(dn / m);
    }
    let finite = [stats.policy_loss, stats.value_loss].iter().all(|v| v.is_finite())
        && learner.policy.mean_net().is_finite()
        && learner.critic.is_finite()
        && learner.disc.as_ref().is_none_or(|d| d.net().is_finite());
    if !finite {
        return Err(RlError::Divergence(format!(
            "non-finite loss or parameters after update (policy {}, value {})",
            stats.policy_loss, stats.value_loss
        )));
    }
    Ok(stats)
}
