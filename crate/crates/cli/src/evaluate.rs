use std::path::Path;

use advdiff::envs::{Env, PointMassConfig, PointMassTrackEnv, SteeringEnv, TriObjectiveEnv};
use advdiff::nets::checkpoint::load_mlp;
use advdiff::rl::{evaluate_policy, evaluate_with, EvalReport};
use advdiff::GaussianPolicy;

use crate::config::{ExperimentConfig, TaskKind};
use crate::CliError;

/// Evaluates a saved policy with its mean action. The environment is
/// rebuilt from the run config stored in the checkpoint; `horizon`
/// defaults to the run's evaluation horizon.
pub fn evaluate_checkpoint(path: &Path, episodes: usize, seed: u64, horizon: Option<usize>) -> Result<EvalReport, CliError> {
    let (net, header) = load_mlp::<f64>(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    if header.meta.get("role").and_then(|r| r.as_str()) != Some("policy") {
        return Err(CliError::Config(format!("{} is not a policy checkpoint", path.display())));
    }
    let sigma: Vec<f64> = serde_json::from_value(header.meta["sigma"].clone())
        .map_err(|e| CliError::Config(format!("checkpoint sigma: {e}")))?;
    let cfg: ExperimentConfig = serde_json::from_value(header.meta["config"].clone())
        .map_err(|e| CliError::Config(format!("checkpoint config: {e}")))?;
    let policy = GaussianPolicy::new(net, sigma)?;
    let horizon = horizon.unwrap_or_else(|| cfg.eval_horizon());
    match cfg.task {
        TaskKind::PointmassTrack => eval_env(&PointMassTrackEnv::new(cfg.pointmass_config())?, &policy, episodes, horizon, seed),
        TaskKind::TriObjective => eval_env(&TriObjectiveEnv::new(cfg.tri_objective.clone())?, &policy, episodes, horizon, seed),
        TaskKind::Steering => eval_env(&SteeringEnv::new(cfg.steering_config())?, &policy, episodes, horizon, seed),
        TaskKind::Regression => Err(CliError::Config("regression checkpoints have no policy to evaluate".into())),
    }
}

fn eval_env<E: Env + Clone>(
    env: &E,
    policy: &GaussianPolicy,
    episodes: usize,
    horizon: usize,
    seed: u64,
) -> Result<EvalReport, CliError> {
    let input = policy.mean_net().layer_sizes()[0];
    if input != env.obs_dim() || policy.action_dim() != env.action_dim() {
        return Err(CliError::Config(format!(
            "policy maps {input} -> {} but the environment has {} -> {}",
            policy.action_dim(),
            env.obs_dim(),
            env.action_dim()
        )));
    }
    Ok(evaluate_policy(env, policy, episodes, horizon, seed)?)
}

/// The dead-beat controller on `pointmass_track`, driven from the
/// observation alone: it lands on the next reference position whenever
/// the acceleration bound allows.
pub fn oracle_report(cfg: &PointMassConfig, episodes: usize, horizon: usize, seed: u64) -> Result<EvalReport, CliError> {
    let env = PointMassTrackEnv::new(cfg.clone())?;
    let dt = cfg.dt;
    Ok(evaluate_with(&env, episodes, horizon, seed, |obs| {
        // obs = [p_ref' - p, v_ref' - v, p_ref', v_ref']
        let v = [obs[6] - obs[2], obs[7] - obs[3]];
        Ok(vec![(obs[0] - v[0] * dt) / (dt * dt), (obs[1] - v[1] * dt) / (dt * dt)])
    })?)
}
