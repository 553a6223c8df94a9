use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::add::FeatureLayout;
use crate::baselines::{ExpRewardSpec, ExpSetting, ResolvedExpReward};
use crate::envs::{check_action, Env, EnvError, Reference, ReferenceKind, Step};

pub const TRACKING_LABELS: [&str; 4] = ["pos_x", "pos_y", "vel_x", "vel_y"];

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PointMassState {
    pub position: [f64; 2],
    pub velocity: [f64; 2],
    /// Reference phase in `[0, 1)`.
    pub phase: f64,
}

/// One semi-implicit Euler step of the double integrator with the
/// acceleration clamped to `[-a_max, a_max]` per axis:
/// `v' = v + a dt`, `p' = p + v' dt`.
pub fn double_integrator(
    position: [f64; 2],
    velocity: [f64; 2],
    action: &[f64],
    dt: f64,
    a_max: f64,
) -> ([f64; 2], [f64; 2]) {
    let mut p = position;
    let mut v = velocity;
    for k in 0..2 {
        let a = action[k].clamp(-a_max, a_max);
        v[k] += a * dt;
        p[k] += v[k] * dt;
    }
    (p, v)
}

pub(crate) fn advance_phase(phase: f64, dt: f64, period: f64) -> f64 {
    let next = phase + dt / period;
    next - next.floor()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PointMassConfig {
    pub dt: f64,
    pub a_max: f64,
    pub reference: Reference,
    /// Std of the position / velocity perturbation at reset.
    pub init_position_noise: f64,
    pub init_velocity_noise: f64,
    /// Position error (m) beyond which a step reports failure.
    pub fail_distance: f64,
    pub exp_reward: ExpRewardSpec,
}

impl Default for PointMassConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            a_max: 5.0,
            reference: Reference {
                kind: ReferenceKind::Circle,
                period: 5.0,
                amplitude: 1.0,
            },
            init_position_noise: 0.1,
            init_velocity_noise: 0.1,
            fail_distance: 1.5,
            exp_reward: ExpRewardSpec::point_mass(ExpSetting::Default),
        }
    }
}

impl PointMassConfig {
    pub fn validate(&self) -> Result<(), EnvError> {
        if !(self.dt > 0.0) || !(self.a_max > 0.0) {
            return Err(EnvError::InvalidConfig("dt and a_max must be positive".into()));
        }
        if !(self.init_position_noise >= 0.0) || !(self.init_velocity_noise >= 0.0) {
            return Err(EnvError::InvalidConfig("reset noise must be non-negative".into()));
        }
        if !(self.fail_distance > 0.0) {
            return Err(EnvError::InvalidConfig("fail_distance must be positive".into()));
        }
        self.reference.validate()?;
        self.exp_reward.validate()?;
        Ok(())
    }
}

/// A point mass tracking a periodic reference. The differential is
/// `[p_ref - p, v_ref - v]` after each step.
///
/// Observation: `[p_ref' - p, v_ref' - v, p_ref', v_ref']` where `'` is the
/// reference at the phase the next step lands on.
#[derive(Clone, Debug)]
pub struct PointMassTrackEnv {
    cfg: PointMassConfig,
    state: PointMassState,
    layout: Arc<FeatureLayout>,
    reward: ResolvedExpReward,
}

impl PointMassTrackEnv {
    pub fn new(cfg: PointMassConfig) -> Result<Self, EnvError> {
        cfg.validate()?;
        let layout = FeatureLayout::linear(&TRACKING_LABELS);
        let reward = cfg.exp_reward.resolve(&layout)?;
        Ok(Self {
            state: PointMassState::default(),
            cfg,
            layout,
            reward,
        })
    }

    pub fn config(&self) -> &PointMassConfig {
        &self.cfg
    }

    pub fn state(&self) -> PointMassState {
        self.state
    }

    pub fn set_state(&mut self, state: PointMassState) {
        self.state = state;
    }

    pub fn next_phase(&self) -> f64 {
        advance_phase(self.state.phase, self.cfg.dt, self.cfg.reference.period)
    }

    pub fn observation(&self) -> Vec<f64> {
        let r = self.cfg.reference.features(self.next_phase());
        let s = &self.state;
        vec![
            r[0] - s.position[0],
            r[1] - s.position[1],
            r[2] - s.velocity[0],
            r[3] - s.velocity[1],
            r[0],
            r[1],
            r[2],
            r[3],
        ]
    }

    /// Pure transition: `(next_state, agent features, reference features)`.
    pub fn transition(&self, state: &PointMassState, action: &[f64]) -> (PointMassState, [f64; 4], [f64; 4]) {
        let (p, v) = double_integrator(state.position, state.velocity, action, self.cfg.dt, self.cfg.a_max);
        let phase = advance_phase(state.phase, self.cfg.dt, self.cfg.reference.period);
        let next = PointMassState {
            position: p,
            velocity: v,
            phase,
        };
        (next, [p[0], p[1], v[0], v[1]], self.cfg.reference.features(phase))
    }
}

/// Dead-beat position controller: lands exactly on the next reference
/// position whenever the required acceleration is within bounds.
pub fn oracle_action(env: &PointMassTrackEnv) -> [f64; 2] {
    let s = env.state();
    let dt = env.config().dt;
    let target = env.config().reference.position(env.next_phase());
    [
        (target[0] - s.position[0] - s.velocity[0] * dt) / (dt * dt),
        (target[1] - s.position[1] - s.velocity[1] * dt) / (dt * dt),
    ]
}

impl Env for PointMassTrackEnv {
    fn obs_dim(&self) -> usize {
        8
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn delta_layout(&self) -> Arc<FeatureLayout> {
        self.layout.clone()
    }

    fn objective_names(&self) -> Vec<&'static str> {
        vec!["position", "velocity"]
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let phase: f64 = rng.gen_range(0.0..1.0);
        let r = self.cfg.reference.features(phase);
        let mut noise = |std: f64| -> f64 {
            let z: f64 = rng.sample(StandardNormal);
            std * z
        };
        let (np, nv) = (self.cfg.init_position_noise, self.cfg.init_velocity_noise);
        self.state = PointMassState {
            position: [r[0] + noise(np), r[1] + noise(np)],
            velocity: [r[2] + noise(nv), r[3] + noise(nv)],
            phase,
        };
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<Step, EnvError> {
        check_action(action, 2)?;
        let (next, agent, reference) = self.transition(&self.state, action);
        self.state = next;
        let delta: Vec<f64> = (0..4).map(|k| reference[k] - agent[k]).collect();
        let pos_err = delta[0].hypot(delta[1]);
        let vel_err = delta[2].hypot(delta[3]);
        Ok(Step {
            obs: self.observation(),
            manual_reward: self.reward.eval(&delta),
            failed: pos_err > self.cfg.fail_distance,
            tracking_error: Some(pos_err),
            objective_errors: vec![pos_err, vel_err],
            delta,
        })
    }
}
