use std::f64::consts::TAU;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::add::{DifferentialVector, FeatureLayout};
use crate::baselines::{mixed_task_reward, ExpRewardSpec, ExpSetting, ResolvedExpReward};
use crate::envs::point_mass::{advance_phase, double_integrator, TRACKING_LABELS};
use crate::envs::{check_action, Env, EnvError, Step};

/// Target heading (unit vector) and speed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteeringTarget {
    pub direction: [f64; 2],
    pub speed: f64,
}

impl SteeringTarget {
    pub fn new(direction: [f64; 2], speed: f64) -> Result<Self, EnvError> {
        let norm = direction[0].hypot(direction[1]);
        if (norm - 1.0).abs() > 1e-9 {
            return Err(EnvError::InvalidConfig(format!(
                "steering direction must be a unit vector, norm is {norm}"
            )));
        }
        if !speed.is_finite() {
            return Err(EnvError::NonFinite("target speed"));
        }
        Ok(Self { direction, speed })
    }

    pub fn from_angle(angle: f64, speed: f64) -> Self {
        Self {
            direction: [angle.cos(), angle.sin()],
            speed,
        }
    }

    /// `(v.d*, |v - (v.d*) d*|)`
    pub fn decompose(&self, v: [f64; 2]) -> (f64, f64) {
        let d = self.direction;
        let along = v[0] * d[0] + v[1] * d[1];
        let lateral = (v[0] - along * d[0]).hypot(v[1] - along * d[1]);
        (along, lateral)
    }

    /// `|v - v* d*|`
    pub fn velocity_error(&self, v: [f64; 2]) -> f64 {
        (v[0] - self.speed * self.direction[0]).hypot(v[1] - self.speed * self.direction[1])
    }

    fn normal(&self) -> [f64; 2] {
        [-self.direction[1], self.direction[0]]
    }
}

pub const STEERING_LABELS: [&str; 2] = ["speed_along", "speed_lateral"];

/// `[delta_tracking, v* - v.d*, -|v - (v.d*) d*|]`.
pub fn steering_augment(
    delta: &DifferentialVector,
    velocity: [f64; 2],
    target: &SteeringTarget,
) -> Result<DifferentialVector, EnvError> {
    SteeringTarget::new(target.direction, target.speed)?;
    let (along, lateral) = target.decompose(velocity);
    let task = DifferentialVector::new(
        vec![target.speed - along, -lateral],
        FeatureLayout::linear(&STEERING_LABELS),
    )?;
    Ok(delta.concat(&task))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SteeringConfig {
    pub dt: f64,
    pub a_max: f64,
    /// Period (s) and amplitude (m) of the sideways motion of the reference.
    pub period: f64,
    pub amplitude: f64,
    pub speed_range: [f64; 2],
    /// Steps between target resamples.
    pub resample_every: usize,
    /// Amplification of the two appended entries after normalization.
    pub task_amplification: f64,
    pub init_position_noise: f64,
    pub init_velocity_noise: f64,
    pub fail_distance: f64,
    pub tracking_reward: ExpRewardSpec,
}

impl Default for SteeringConfig {
    fn default() -> Self {
        Self {
            dt: 0.05,
            a_max: 5.0,
            period: 2.5,
            amplitude: 0.0,
            speed_range: [0.5, 1.5],
            resample_every: 60,
            task_amplification: 50.0,
            init_position_noise: 0.1,
            init_velocity_noise: 0.1,
            fail_distance: 1.5,
            tracking_reward: ExpRewardSpec::point_mass(ExpSetting::Default),
        }
    }
}

/// Tracking a reference that travels at the target velocity while swaying
/// sideways, so that pure tracking and pure steering disagree. The target
/// is resampled every `resample_every` steps and the reference turns with it.
///
/// Observation: `[p_ref' - p, v_ref' - v, d*, v*, v]`.
#[derive(Clone, Debug)]
pub struct SteeringEnv {
    cfg: SteeringConfig,
    position: [f64; 2],
    velocity: [f64; 2],
    /// Reference position without the sideways term.
    center: [f64; 2],
    phase: f64,
    target: SteeringTarget,
    since_resample: usize,
    rng: ChaCha8Rng,
    layout: Arc<FeatureLayout>,
    tracking_reward: ResolvedExpReward,
}

impl SteeringEnv {
    pub fn new(cfg: SteeringConfig) -> Result<Self, EnvError> {
        let [lo, hi] = cfg.speed_range;
        if !(cfg.dt > 0.0)
            || !(cfg.a_max > 0.0)
            || !(cfg.period > 0.0)
            || !(cfg.amplitude >= 0.0)
            || !(lo <= hi)
            || cfg.resample_every == 0
            || !(cfg.task_amplification > 0.0)
            || !(cfg.fail_distance > 0.0)
        {
            return Err(EnvError::InvalidConfig("steering task parameters out of range".into()));
        }
        let tracking = FeatureLayout::linear(&TRACKING_LABELS);
        let tracking_reward = cfg.tracking_reward.resolve(&tracking)?;
        let layout = tracking.concat(&FeatureLayout::linear(&STEERING_LABELS));
        Ok(Self {
            position: [0.0; 2],
            velocity: [0.0; 2],
            center: [0.0; 2],
            phase: 0.0,
            target: SteeringTarget::from_angle(0.0, lo),
            since_resample: 0,
            rng: ChaCha8Rng::seed_from_u64(0),
            layout,
            tracking_reward,
            cfg,
        })
    }

    pub fn target(&self) -> SteeringTarget {
        self.target
    }

    pub fn velocity(&self) -> [f64; 2] {
        self.velocity
    }

    fn sway(&self, phase: f64) -> (f64, f64) {
        let th = TAU * phase;
        let w = TAU / self.cfg.period;
        (self.cfg.amplitude * th.sin(), self.cfg.amplitude * w * th.cos())
    }

    fn reference_at(&self, center: [f64; 2], phase: f64) -> [f64; 4] {
        let (s, ds) = self.sway(phase);
        let n = self.target.normal();
        let d = self.target.direction;
        let v = self.target.speed;
        [
            center[0] + s * n[0],
            center[1] + s * n[1],
            v * d[0] + ds * n[0],
            v * d[1] + ds * n[1],
        ]
    }

    /// Reference features now.
    pub fn reference(&self) -> [f64; 4] {
        self.reference_at(self.center, self.phase)
    }

    fn next_center_phase(&self) -> ([f64; 2], f64) {
        let t = &self.target;
        (
            [
                self.center[0] + t.speed * t.direction[0] * self.cfg.dt,
                self.center[1] + t.speed * t.direction[1] * self.cfg.dt,
            ],
            advance_phase(self.phase, self.cfg.dt, self.cfg.period),
        )
    }

    fn observation(&self) -> Vec<f64> {
        let (c, ph) = self.next_center_phase();
        let r = self.reference_at(c, ph);
        let t = &self.target;
        vec![
            r[0] - self.position[0],
            r[1] - self.position[1],
            r[2] - self.velocity[0],
            r[3] - self.velocity[1],
            t.direction[0],
            t.direction[1],
            t.speed,
            self.velocity[0],
            self.velocity[1],
        ]
    }

    fn sample_target(&mut self) -> SteeringTarget {
        let angle = self.rng.gen_range(0.0..TAU);
        let [lo, hi] = self.cfg.speed_range;
        let speed = if hi > lo { self.rng.gen_range(lo..hi) } else { lo };
        SteeringTarget::from_angle(angle, speed)
    }

    fn resample(&mut self) {
        // Keep the reference position continuous across the turn.
        let before = self.reference();
        self.target = self.sample_target();
        let (s, _) = self.sway(self.phase);
        let n = self.target.normal();
        self.center = [before[0] - s * n[0], before[1] - s * n[1]];
        self.since_resample = 0;
    }
}

impl Env for SteeringEnv {
    fn obs_dim(&self) -> usize {
        9
    }

    fn action_dim(&self) -> usize {
        2
    }

    fn delta_layout(&self) -> Arc<FeatureLayout> {
        self.layout.clone()
    }

    fn delta_amplification(&self) -> Vec<f64> {
        let a = self.cfg.task_amplification;
        vec![1.0, 1.0, 1.0, 1.0, a, a]
    }

    fn objective_names(&self) -> Vec<&'static str> {
        vec!["position", "target_velocity"]
    }

    fn reset(&mut self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        self.rng = ChaCha8Rng::seed_from_u64(rng.gen());
        self.phase = self.rng.gen_range(0.0..1.0);
        self.target = self.sample_target();
        self.since_resample = 0;
        let (s, _) = self.sway(self.phase);
        let n = self.target.normal();
        self.center = [-s * n[0], -s * n[1]];
        let r = self.reference();
        let (np, nv) = (self.cfg.init_position_noise, self.cfg.init_velocity_noise);
        let mut noise = |std: f64| -> f64 {
            let z: f64 = self.rng.sample(StandardNormal);
            std * z
        };
        let p = [r[0] + noise(np), r[1] + noise(np)];
        let v = [r[2] + noise(nv), r[3] + noise(nv)];
        self.position = p;
        self.velocity = v;
        self.observation()
    }

    fn step(&mut self, action: &[f64]) -> Result<Step, EnvError> {
        check_action(action, 2)?;
        let (p, v) = double_integrator(self.position, self.velocity, action, self.cfg.dt, self.cfg.a_max);
        self.position = p;
        self.velocity = v;
        (self.center, self.phase) = self.next_center_phase();
        let r = self.reference();
        let tracking: Vec<f64> = vec![r[0] - p[0], r[1] - p[1], r[2] - v[0], r[3] - v[1]];
        let (along, lateral) = self.target.decompose(v);
        let mut delta = tracking.clone();
        delta.push(self.target.speed - along);
        delta.push(-lateral);
        let pos_err = tracking[0].hypot(tracking[1]);
        let vel_err = self.target.velocity_error(v);
        let r_track = self.tracking_reward.eval(&tracking);
        let manual = mixed_task_reward(r_track, v, &self.target);
        self.since_resample += 1;
        if self.since_resample >= self.cfg.resample_every {
            self.resample();
        }
        Ok(Step {
            obs: self.observation(),
            delta,
            manual_reward: manual,
            failed: pos_err > self.cfg.fail_distance,
            tracking_error: Some(pos_err),
            objective_errors: vec![pos_err, vel_err],
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn zeros() -> DifferentialVector {
        DifferentialVector::zeros(FeatureLayout::linear(&TRACKING_LABELS))
    }

    #[test]
    fn on_target_appends_zeros() {
        let t = SteeringTarget::new([0.6, -0.8], 2.0).unwrap();
        let d = steering_augment(&zeros(), [1.2, -1.6], &t).unwrap();
        assert_eq!(d.len(), 6);
        assert!(d.values()[4].abs() < 1e-15);
        assert!(d.values()[5].abs() < 1e-15);
        assert_eq!(d.labels()[4], "speed_along");
    }

    #[test]
    fn orthogonal_velocity() {
        let t = SteeringTarget::new([1.0, 0.0], 1.0).unwrap();
        let d = steering_augment(&zeros(), [0.0, 1.0], &t).unwrap();
        assert_eq!(&d.values()[4..], &[1.0, -1.0]);
    }

    #[test]
    fn non_unit_direction_is_rejected() {
        assert!(SteeringTarget::new([1.0, 1.0], 1.0).is_err());
        let bad = SteeringTarget {
            direction: [2.0, 0.0],
            speed: 1.0,
        };
        assert!(steering_augment(&zeros(), [0.0, 0.0], &bad).is_err());
    }

    #[test]
    fn matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let a: f64 = rng.gen_range(0.0..TAU);
            let t = SteeringTarget::from_angle(a, rng.gen_range(0.0..3.0));
            let v = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let d = steering_augment(&zeros(), v, &t).unwrap();
            let dot = v[0] * a.cos() + v[1] * a.sin();
            let perp = ((v[0] - dot * a.cos()).powi(2) + (v[1] - dot * a.sin()).powi(2)).sqrt();
            assert!((d.values()[4] - (t.speed - dot)).abs() < 1e-12);
            assert!((d.values()[5] + perp).abs() < 1e-12);
        }
    }

    #[test]
    fn feedforward_follows_the_reference() {
        let mut e = SteeringEnv::new(SteeringConfig {
            init_position_noise: 0.0,
            init_velocity_noise: 0.0,
            ..SteeringConfig::default()
        })
        .unwrap();
        e.reset(&mut ChaCha8Rng::seed_from_u64(9));
        let dt = 0.05;
        let mut worst: f64 = 0.0;
        for i in 0..59 {
            let obs = e.observation();
            // Dead-beat on the observed next reference position.
            let a = [
                (obs[0] - e.velocity[0] * dt) / (dt * dt),
                (obs[1] - e.velocity[1] * dt) / (dt * dt),
            ];
            let s = e.step(&a).unwrap();
            assert_eq!(s.delta.len(), 6);
            if i > 0 {
                worst = worst.max(s.tracking_error.unwrap());
            }
        }
        assert!(worst < 1e-9, "{worst}");
    }

    #[test]
    fn reference_is_continuous_across_resamples() {
        let mut e = SteeringEnv::new(SteeringConfig::default()).unwrap();
        e.reset(&mut ChaCha8Rng::seed_from_u64(1));
        let mut prev = e.reference();
        for _ in 0..200 {
            e.step(&[0.0, 0.0]).unwrap();
            let r = e.reference();
            let jump = (r[0] - prev[0]).hypot(r[1] - prev[1]);
            assert!(jump < 0.2, "{jump}");
            prev = r;
        }
    }

    #[test]
    fn amplification_targets_appended_entries() {
        let e = SteeringEnv::new(SteeringConfig::default()).unwrap();
        assert_eq!(e.delta_amplification(), vec![1.0, 1.0, 1.0, 1.0, 50.0, 50.0]);
        assert_eq!(e.delta_layout().len(), 6);
    }
}
