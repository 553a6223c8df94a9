use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::add::FeatureLayout;
use crate::baselines::{walker_manual_reward, WalkerRewardSpec};
use crate::envs::point_mass::double_integrator;
use crate::envs::{check_action, Env, EnvError, Step};

/// `(h*, u*, v*)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriObjectiveTargets {
    pub height: f64,
    pub uprightness: f64,
    pub speed: f64,
}

impl TriObjectiveTargets {
    pub fn toy() -> Self {
        Self {
            height: 1.0,
            uprightness: 1.0,
            speed: 1.0,
        }
    }

    pub fn humanoid() -> Self {
        Self {
            height: 1.2,
            uprightness: 1.0,
            speed: 8.0,
        }
    }
}

/// `h`: distance from the origin, `u`: cosine between the velocity and the
/// counter-clockwise tangent, `v`: speed. `u` is 0 when either vector vanishes.
pub fn tri_objective_measures(position: [f64; 2], velocity: [f64; 2]) -> (f64, f64, f64) {
    let h = position[0].hypot(position[1]);
    let v = velocity[0].hypot(velocity[1]);
    let u = if h > 0.0 && v > 0.0 {
        let tangent = [-position[1] / h, position[0] / h];
        (tangent[0] * velocity[0] + tangent[1] * velocity[1]) / v
    } else {
        0.0
    };
    (h, u, v)
}

/// `[h* - h, u* - u, v* - v]`, height first.
pub fn tri_objective_delta(position: [f64; 2], velocity: [f64; 2], targets: &TriObjectiveTargets) -> [f64; 3] {
    let (h, u, v) = tri_objective_measures(position, velocity);
    [targets.height - h, targets.uprightness - u, targets.speed - v]
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TriObjectiveConfig {
    pub dt: f64,
    pub a_max: f64,
    pub targets: TriObjectiveTargets,
    pub manual: WalkerRewardSpec,
    /// Initial distance from the origin is drawn from `U[0.2, init_radius]`.
    pub init_radius: f64,
    pub init_velocity_noise: f64,
    /// Distance from the origin beyond which a step reports failure.
    pub fail_radius: f64,
}

impl Default for TriObjectiveConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            a_max: 5.0,
            targets: TriObjectiveTargets::toy(),
            manual: WalkerRewardSpec::toy(),
            init_radius: 2.0,
            init_velocity_noise: 0.5,
            fail_radius: 5.0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TriObjectiveEnv {
    cfg: TriObjectiveConfig,
    position: [f64; 2],
    velocity: [f64; 2],
    layout: Arc<FeatureLayout>,
}

impl TriObjectiveEnv {
    pub const LABELS: [&'static str; 3] = ["height", "uprightness", "speed"];

    pub fn new(cfg: TriObjectiveConfig) -> Result<Self, EnvError> {
        if !(cfg.dt > 0.0) || !(cfg.a_max > 0.0) || !(cfg.init_radius > 0.2) || !(cfg.fail_radius > 0.0) {
            return Err(EnvError::InvalidConfig("three-objective task parameters out of range".into()));
        }
        cfg.manual.validate()?;
        Ok(Self {
            cfg,
            position: [1.0, 0.0],
            velocity: [0.0, 0.0],
            layout: FeatureLayout::linear(&Self::LABELS),
        })
    }

    pub fn set_state(&mut self, position: [f64; 2], velocity: [f64; 2]) {
        self.position = position;
        self.velocity = velocity;
    }

    fn observation(&self) -> Vec<f64> {
        let d = tri_objective_delta(self.position, self.velocity, &self.cfg.targets);
        vec![
            self.position[0],
            self.position[1],
            self.velocity[0],
            self.velocity[1],
            d[0],
            d[1],
            d[2],
        ]
    }
}

impl Env for TriObjectiveEnv {
    fn obs_dim(&self) -> usize {
        7
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn delta_layout(&self) -> Arc<FeatureLayout> {
        self.layout.clone()
    }

    fn objective_names(&self) -> Vec<&'static str> {
        Self::LABELS.to_vec()
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let radius: f64 = rng.gen_range(0.2..self.cfg.init_radius);
        self.position = [radius * angle.cos(), radius * angle.sin()];
        let nv = self.cfg.init_velocity_noise;
        let (zx, zy): (f64, f64) = (rng.sample(StandardNormal), rng.sample(StandardNormal));
        self.velocity = [nv * zx, nv * zy];
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<Step, EnvError> {
        check_action(action, 2)?;
        let (p, v) = double_integrator(self.position, self.velocity, action, self.cfg.dt, self.cfg.a_max);
        self.position = p;
        self.velocity = v;
        let (h, u, speed) = tri_objective_measures(p, v);
        let delta = tri_objective_delta(p, v, &self.cfg.targets);
        Ok(Step {
            obs: self.observation(),
            delta: delta.to_vec(),
            manual_reward: walker_manual_reward(h, u, speed, &self.cfg.manual),
            failed: h > self.cfg.fail_radius,
            tracking_error: None,
            objective_errors: delta.iter().map(|d| d.abs()).collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn humanoid_targets_reached_give_zero() {
        // On a circle of radius 1.2, moving counter-clockwise at 8 m/s.
        let d = tri_objective_delta([0.0, 1.2], [-8.0, 0.0], &TriObjectiveTargets::humanoid());
        assert_eq!(d, [0.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_state_gives_targets() {
        let d = tri_objective_delta([0.0, 0.0], [0.0, 0.0], &TriObjectiveTargets::humanoid());
        assert_eq!(d, [1.2, 1.0, 8.0]);
    }

    #[test]
    fn matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let t = TriObjectiveTargets::toy();
        for _ in 0..1000 {
            let p: [f64; 2] = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let v: [f64; 2] = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let h = (p[0] * p[0] + p[1] * p[1]).sqrt();
            let speed = (v[0] * v[0] + v[1] * v[1]).sqrt();
            let angle_v = v[1].atan2(v[0]);
            let angle_t = p[1].atan2(p[0]) + std::f64::consts::FRAC_PI_2;
            let u = (angle_v - angle_t).cos();
            let d = tri_objective_delta(p, v, &t);
            assert!((d[0] - (1.0 - h)).abs() < 1e-12);
            assert!((d[1] - (1.0 - u)).abs() < 1e-12);
            assert!((d[2] - (1.0 - speed)).abs() < 1e-12);
        }
    }

    #[test]
    fn labels_put_height_first() {
        let e = TriObjectiveEnv::new(TriObjectiveConfig::default()).unwrap();
        assert_eq!(e.delta_layout().labels()[0], "height");
        assert_eq!(e.delta_layout().len(), 3);
    }

    #[test]
    fn step_reports_manual_reward() {
        let mut e = TriObjectiveEnv::new(TriObjectiveConfig::default()).unwrap();
        e.reset(&mut ChaCha8Rng::seed_from_u64(0));
        e.set_state([1.0, 0.0], [0.0, 1.0]);
        let s = e.step(&[-1.0, 0.0]).unwrap();
        assert!(s.delta.iter().all(|d| d.abs() < 0.1));
        assert!(s.manual_reward > 0.9);
        assert!(s.tracking_error.is_none());
    }
}
