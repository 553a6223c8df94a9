use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::add::{add_reward, DeltaNormalizer};
use crate::envs::Env;
use crate::nets::{Discriminator, GaussianPolicy, Mlp};
use crate::rl::{Episode, RlError, TrajectoryBuffer, Transition};

/// Where per-step rewards come from.
#[derive(Clone, Copy, Debug)]
pub enum RewardModel<'a> {
    /// `-log(1 - D(normalize(delta)))`.
    Add {
        disc: &'a Discriminator<f64>,
        normalizer: &'a DeltaNormalizer,
    },
    /// The environment's hand-designed reward.
    Manual,
}

impl RewardModel<'_> {
    pub fn reward(&self, delta: &[f64], manual: f64) -> Result<f64, RlError> {
        match self {
            RewardModel::Add { disc, normalizer } => {
                let x = normalizer.normalize_values(delta)?;
                Ok(add_reward(*disc, &x)?)
            }
            RewardModel::Manual => Ok(manual),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CollectSpec {
    /// Trajectory slots `m`; each runs exactly `horizon` steps.
    pub trajectories: usize,
    pub horizon: usize,
    /// End the episode (and reset) when the environment reports failure.
    pub terminate_on_failure: bool,
    pub workers: usize,
    pub seed: u64,
    pub iteration: u64,
}

fn slot_rng(seed: u64, slot: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(slot as u64);
    rng
}

fn value_of(critic: &Mlp<f64>, obs: &[f64], value_scale: f64) -> Result<f64, RlError> {
    Ok(critic.forward(obs)?[0] / value_scale)
}

#[allow(clippy::too_many_arguments)]
fn run_slot<E: Env>(
    env: &mut E,
    policy: &GaussianPolicy<f64>,
    critic: &Mlp<f64>,
    value_scale: f64,
    reward: &RewardModel<'_>,
    spec: &CollectSpec,
    slot: usize,
) -> Result<Vec<Episode>, RlError> {
    let mut rng = slot_rng(spec.seed, slot);
    let mut episodes = Vec::new();
    let mut obs = env.reset(&mut rng);
    let mut ep = new_episode();
    for t in 0..spec.horizon {
        let (action, log_prob) = policy.sample(&obs, &mut rng)?;
        let value = value_of(critic, &obs, value_scale)?;
        let step = env.step(&action)?;
        let r = reward.reward(&step.delta, step.manual_reward)?;
        if !r.is_finite() || !log_prob.is_finite() {
            return Err(RlError::Divergence(format!("non-finite reward or log-prob at slot {slot}, step {t}")));
        }
        let done = step.failed && spec.terminate_on_failure;
        ep.transitions.push(Transition {
            obs: std::mem::take(&mut obs),
            action,
            log_prob,
            value,
            reward: r,
            done,
            delta: step.delta,
            iteration: spec.iteration,
        });
        if let Some(e) = step.tracking_error {
            ep.tracking_errors.push(e);
        }
        ep.objective_errors.push(step.objective_errors);
        ep.manual_return += step.manual_reward;
        if done {
            ep.bootstrap_value = 0.0;
            episodes.push(std::mem::replace(&mut ep, new_episode()));
            obs = env.reset(&mut rng);
        } else {
            obs = step.obs;
        }
    }
    if !ep.is_empty() {
        ep.bootstrap_value = value_of(critic, &obs, value_scale)?;
        episodes.push(ep);
    }
    Ok(episodes)
}

fn new_episode() -> Episode {
    Episode {
        transitions: Vec::new(),
        bootstrap_value: 0.0,
        tracking_errors: Vec::new(),
        objective_errors: Vec::new(),
        manual_return: 0.0,
    }
}

/// Runs `m` trajectory slots of `T` steps with the stochastic policy.
///
/// Slot `i` draws all of its randomness from stream `i` of a generator
/// seeded with `spec.seed`, so the buffer does not depend on `workers`.
/// Values are stored in return units (the critic output divided by
/// `value_scale`).
pub fn collect<E: Env + Clone>(
    env: &E,
    policy: &GaussianPolicy<f64>,
    critic: &Mlp<f64>,
    value_scale: f64,
    reward: &RewardModel<'_>,
    spec: &CollectSpec,
) -> Result<TrajectoryBuffer, RlError> {
    if spec.trajectories == 0 || spec.horizon == 0 {
        return Err(RlError::InvalidConfig("trajectory count and horizon must be positive".into()));
    }
    check_dims(env, policy, critic)?;
    let workers = spec.workers.clamp(1, spec.trajectories);
    let mut slots: Vec<Option<Vec<Episode>>> = vec![None; spec.trajectories];
    if workers == 1 {
        let mut env = env.clone();
        for (i, slot) in slots.iter_mut().enumerate() {
            *slot = Some(run_slot(&mut env, policy, critic, value_scale, reward, spec, i)?);
        }
    } else {
        type SlotResult = Result<Vec<(usize, Vec<Episode>)>, RlError>;
        let results: Vec<SlotResult> = std::thread::scope(|s| {
            let handles: Vec<_> = (0..workers)
                .map(|w| {
                    let mut env = env.clone();
                    s.spawn(move || {
                        (w..spec.trajectories)
                            .step_by(workers)
                            .map(|i| Ok((i, run_slot(&mut env, policy, critic, value_scale, reward, spec, i)?)))
                            .collect()
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().unwrap_or_else(|_| Err(RlError::Divergence("rollout worker panicked".into()))))
                .collect()
        });
        for r in results {
            for (i, eps) in r? {
                slots[i] = Some(eps);
            }
        }
    }
    Ok(TrajectoryBuffer {
        iteration: spec.iteration,
        episodes: slots.into_iter().flatten().flatten().collect(),
    })
}

fn check_dims<E: Env>(env: &E, policy: &GaussianPolicy<f64>, critic: &Mlp<f64>) -> Result<(), RlError> {
    let checks = [
        ("policy input", env.obs_dim(), policy.mean_net().input_dim()),
        ("policy output", env.action_dim(), policy.action_dim()),
        ("critic input", env.obs_dim(), critic.input_dim()),
        ("critic output", 1, critic.output_dim()),
    ];
    for (what, expected, got) in checks {
        if expected != got {
            return Err(RlError::Dimension { what, expected, got });
        }
    }
    Ok(())
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Self {
        if values.is_empty() {
            return Self::default();
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub episodes: usize,
    pub horizon: usize,
    pub seed: u64,
    /// Per-episode mean position tracking error, for tasks with a reference.
    pub tracking_error: Option<MeanStd>,
    pub objective_names: Vec<String>,
    pub objective_errors: Vec<MeanStd>,
    /// Sum of the task's hand-designed reward.
    pub manual_return: MeanStd,
}

/// Rolls out the mean action (no sampling noise, no early termination).
pub fn evaluate_policy<E: Env + Clone>(
    env: &E,
    policy: &GaussianPolicy<f64>,
    episodes: usize,
    horizon: usize,
    seed: u64,
) -> Result<EvalReport, RlError> {
    evaluate_with(env, episodes, horizon, seed, |obs| Ok(policy.mean_action(obs)?))
}

/// Same protocol with an arbitrary controller.
pub fn evaluate_with<E, F>(env: &E, episodes: usize, horizon: usize, seed: u64, mut act: F) -> Result<EvalReport, RlError>
where
    E: Env + Clone,
    F: FnMut(&[f64]) -> Result<Vec<f64>, RlError>,
{
    if episodes == 0 || horizon == 0 {
        return Err(RlError::InvalidConfig("episodes and horizon must be positive".into()));
    }
    let names: Vec<String> = env.objective_names().iter().map(|s| s.to_string()).collect();
    let mut tracking = Vec::new();
    let mut objectives: Vec<Vec<f64>> = vec![Vec::new(); names.len()];
    let mut returns = Vec::new();
    let mut env = env.clone();
    for i in 0..episodes {
        let mut rng = slot_rng(seed, i);
        let mut obs = env.reset(&mut rng);
        let mut track = Vec::new();
        let mut obj = vec![0.0; names.len()];
        let mut ret = 0.0;
        for _ in 0..horizon {
            let a = act(&obs)?;
            let step = env.step(&a)?;
            if let Some(e) = step.tracking_error {
                track.push(e);
            }
            for (o, e) in obj.iter_mut().zip(&step.objective_errors) {
                *o += e;
            }
            ret += step.manual_reward;
            obs = step.obs;
        }
        if !track.is_empty() {
            tracking.push(track.iter().sum::<f64>() / track.len() as f64);
        }
        for (acc, o) in objectives.iter_mut().zip(obj) {
            acc.push(o / horizon as f64);
        }
        returns.push(ret);
    }
    Ok(EvalReport {
        episodes,
        horizon,
        seed,
        tracking_error: if tracking.is_empty() { None } else { Some(MeanStd::of(&tracking)) },
        objective_names: names,
        objective_errors: objectives.iter().map(|v| MeanStd::of(v)).collect(),
        manual_return: MeanStd::of(&returns),
    })
}
