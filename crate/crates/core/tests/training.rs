use advdiff::envs::{PointMassConfig, PointMassTrackEnv, TriObjectiveConfig, TriObjectiveEnv};
use advdiff::rl::{RewardSource, TrainConfig, Trainer};

fn small(source: RewardSource) -> TrainConfig {
    let mut cfg = TrainConfig {
        trajectories: 4,
        horizon: 50,
        reward_source: source,
        seed: 5,
        ..TrainConfig::default()
    };
    cfg.ppo.minibatch_size = 50;
    cfg
}

#[test]
fn every_discriminator_update_sees_one_positive() {
    let env = PointMassTrackEnv::new(PointMassConfig::default()).unwrap();
    let mut t = Trainer::new(env, small(RewardSource::Add)).unwrap();
    let mut minibatches = 0;
    for _ in 0..5 {
        minibatches += t.iterate().unwrap().update.minibatches as u64;
    }
    let p = &t.learner().positives;
    assert_eq!(p.updates, minibatches);
    assert!(p.exactly_one_each());
    assert_eq!(t.samples(), 5 * 4 * 50);
}

#[test]
fn manual_reward_trains_without_a_discriminator() {
    let env = TriObjectiveEnv::new(TriObjectiveConfig::default()).unwrap();
    let mut t = Trainer::new(env, small(RewardSource::Manual)).unwrap();
    let r = t.iterate().unwrap();
    assert!(t.learner().disc.is_none());
    assert!(r.update.disc_loss.is_none());
    assert_eq!(r.objective_errors.len(), 3);
    assert!((r.mean_return - r.manual_return).abs() < 1e-9);
}

#[test]
fn same_seed_same_trajectory_of_records() {
    let make = || {
        let env = PointMassTrackEnv::new(PointMassConfig::default()).unwrap();
        let mut t = Trainer::new(env, small(RewardSource::Add)).unwrap();
        (0..3).map(|_| t.iterate().unwrap()).collect::<Vec<_>>()
    };
    assert_eq!(make(), make());
}

#[test]
fn normalizer_freezes_after_the_warmup() {
    let env = PointMassTrackEnv::new(PointMassConfig::default()).unwrap();
    let mut cfg = small(RewardSource::Add);
    cfg.normalizer_freeze_after = Some(2);
    let mut t = Trainer::new(env, cfg).unwrap();
    t.iterate().unwrap();
    assert!(!t.learner().normalizer.is_frozen());
    t.iterate().unwrap();
    let frozen = t.learner().normalizer.clone();
    assert!(frozen.is_frozen());
    t.iterate().unwrap();
    assert_eq!(t.learner().normalizer, frozen);
}

#[test]
fn short_training_improves_tracking() {
    let env = PointMassTrackEnv::new(PointMassConfig::default()).unwrap();
    let mut cfg = small(RewardSource::Add);
    cfg.trajectories = 8;
    cfg.horizon = 100;
    let mut t = Trainer::new(env, cfg).unwrap();
    let before = t.evaluate(8, 100, 99).unwrap().tracking_error.unwrap().mean;
    for _ in 0..30 {
        t.iterate().unwrap();
    }
    let after = t.evaluate(8, 100, 99).unwrap().tracking_error.unwrap().mean;
    assert!(after < 0.5 * before, "{before} -> {after}");
}
