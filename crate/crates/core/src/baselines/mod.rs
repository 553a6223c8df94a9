//! Hand-designed rewards the learned reward is compared with: weighted
//! exponentiated tracking errors, tolerance-shaped task rewards and the
//! tracking-plus-steering mix.

mod exp;
mod tolerance;

pub use exp::{
    exp_reward, exp_reward_from_errors, ExpRewardSpec, ExpSetting, ExpTerm, ResolvedExpReward,
    TERM_NAMES,
};
pub use tolerance::{
    tolerance, walker_manual_reward, walker_terms, Sigmoid, ToleranceSpec, WalkerRewardSpec,
};

use thiserror::Error;

use crate::envs::SteeringTarget;

#[derive(Debug, Error, PartialEq)]
pub enum BaselineError {
    #[error("invalid reward spec: {0}")]
    InvalidSpec(String),
    #[error("feature `{0}` is not present in the observation")]
    MissingFeature(String),
    #[error("agent and reference feature layouts differ")]
    LayoutMismatch,
}

/// Goal-velocity reward of the steering task:
/// `exp(-2 ((v* - v.d*)^2 + 0.1 |v - (v.d*) d*|^2))`.
pub fn steering_reward(velocity: [f64; 2], target: &SteeringTarget) -> f64 {
    let (along, lateral) = target.decompose(velocity);
    (-2.0 * ((target.speed - along).powi(2) + 0.1 * lateral * lateral)).exp()
}

/// `0.5 * r_track + 0.5 * r_goal`.
pub fn mixed_task_reward(tracking_reward: f64, velocity: [f64; 2], target: &SteeringTarget) -> f64 {
    0.5 * tracking_reward + 0.5 * steering_reward(velocity, target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn on_target_velocity_gives_full_goal_reward() {
        let t = SteeringTarget::new([0.6, 0.8], 1.5).unwrap();
        let v = [0.9, 1.2];
        assert_eq!(steering_reward(v, &t), 1.0);
        assert_eq!(mixed_task_reward(1.0, v, &t), 1.0);
        assert_eq!(mixed_task_reward(0.3, v, &t), 0.65);
    }

    #[test]
    fn mixed_reward_matches_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let angle: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let speed = rng.gen_range(0.2..2.0);
            let t = SteeringTarget::new([angle.cos(), angle.sin()], speed).unwrap();
            let v = [rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
            let r_track: f64 = rng.gen_range(0.0..1.0);
            let dot = v[0] * angle.cos() + v[1] * angle.sin();
            let perp = [v[0] - dot * angle.cos(), v[1] - dot * angle.sin()];
            let perp_sq = perp[0] * perp[0] + perp[1] * perp[1];
            let expected =
                0.5 * r_track + 0.5 * (-2.0 * ((speed - dot).powi(2) + 0.1 * perp_sq)).exp();
            let got = mixed_task_reward(r_track, v, &t);
            assert!((got - expected).abs() < 1e-12);
            assert!((0.0..=1.0).contains(&got));
        }
    }
}
