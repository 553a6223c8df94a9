//! The adversarial differential discriminator: differential vectors, the
//! single-positive discriminator objective with its gradient-penalty
//! variants, and the learned reward `-log(1 - D(delta))`.

mod differential;
mod normalizer;
mod objective;

pub use differential::{
    differential, wrap_angle, DifferentialVector, FeatureKind, FeatureLayout, Features,
};
pub use normalizer::{DeltaNormalizer, DeltaScale};
pub use objective::{disc_loss, gradient_penalty, DiscObjective, DiscStats, Penalty};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::autodiff::AutodiffError;
use crate::nets::{Discriminator, NetsError, SCORE_EPS};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum AddError {
    #[error("differential dimension: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("reference and agent feature labels differ")]
    LabelMismatch,
    #[error("differential contains non-finite entries")]
    NonFinite,
    #[error("discriminator batch is empty")]
    EmptyBatch,
    #[error("gradient penalty weight must be finite and >= 0, got {0}")]
    InvalidLambda(f64),
    #[error(transparent)]
    Nets(#[from] NetsError),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
}

/// Where the gradient penalty is evaluated.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GpMode {
    None,
    /// On the negatives (the observed differentials).
    Neg,
    /// On the single positive, the zero vector.
    Pos,
    /// Sum of the `Pos` and `Neg` terms.
    Both,
    /// `(||grad|| - 1)^2` on random interpolations between 0 and each negative.
    WganGp,
}

impl GpMode {
    pub const ALL: [GpMode; 5] = [
        GpMode::None,
        GpMode::Neg,
        GpMode::Pos,
        GpMode::Both,
        GpMode::WganGp,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            GpMode::None => "none",
            GpMode::Neg => "neg",
            GpMode::Pos => "pos",
            GpMode::Both => "both",
            GpMode::WganGp => "wgan_gp",
        }
    }

    pub fn uses_negatives(self) -> bool {
        match self {
            GpMode::Neg | GpMode::Both | GpMode::WganGp => true,
            GpMode::None | GpMode::Pos => false,
        }
    }
}

impl fmt::Display for GpMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GpMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GpMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| format!("unknown gradient penalty mode `{s}`"))
    }
}

/// `-log(1 - D)` with `D` clamped to `[eps, 1 - eps]`: positive, finite and
/// increasing in `D`.
pub fn reward_from_score(score: f64) -> f64 {
    let d = score.clamp(SCORE_EPS, 1.0 - SCORE_EPS);
    -(-d).ln_1p()
}

/// The learned reward for one differential.
pub fn add_reward<S: Scalar>(d: &Discriminator<S>, delta: &[f64]) -> Result<f64, AddError> {
    if delta.len() != d.input_dim() {
        return Err(AddError::Dimension {
            expected: d.input_dim(),
            got: delta.len(),
        });
    }
    let input: Vec<S> = delta.iter().map(|&v| S::lit(v)).collect();
    Ok(reward_from_score(d.score(&input)?.to_f64_lossy()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::{Activation, Mlp};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn zero_disc(dim: usize) -> Discriminator<f64> {
        let mut net = Mlp::new(&[dim, 8, 1], Activation::Relu, 0).unwrap();
        let n = net.num_parameters();
        net.load_flat(&vec![0.0; n]).unwrap();
        Discriminator::new(net).unwrap()
    }

    fn random_disc(dim: usize, seed: u64) -> Discriminator<f64> {
        Discriminator::new(Mlp::new(&[dim, 16, 16, 1], Activation::Tanh, seed).unwrap()).unwrap()
    }

    fn batch(seed: u64, n: usize, dim: usize) -> Vec<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| (0..dim).map(|_| rng.gen_range(-1.5..1.5)).collect())
            .collect()
    }

    use rand::Rng;

    #[test]
    fn reward_at_one_half_is_ln2() {
        assert!((reward_from_score(0.5) - std::f64::consts::LN_2).abs() < 1e-15);
        let d = zero_disc(3);
        let r = add_reward(&d, &[0.3, 0.1, -2.0]).unwrap();
        assert!((r - std::f64::consts::LN_2).abs() < 1e-12);
    }

    #[test]
    fn reward_floor_is_positive() {
        let r = reward_from_score(0.0);
        assert!(r > 0.0);
        assert!((r - 1e-6).abs() < 1e-11);
        assert!(reward_from_score(1.0).is_finite());
        assert!((reward_from_score(1.0) - 1e6f64.ln()).abs() < 1e-6);
    }

    #[test]
    fn reward_is_monotone_in_score() {
        let d = random_disc(4, 3);
        let deltas = batch(9, 200, 4);
        for pair in deltas.chunks(2) {
            let (s1, s2) = (d.score(&pair[0]).unwrap(), d.score(&pair[1]).unwrap());
            let (r1, r2) = (add_reward(&d, &pair[0]).unwrap(), add_reward(&d, &pair[1]).unwrap());
            if s1 > s2 {
                assert!(r1 > r2);
            } else if s2 > s1 {
                assert!(r2 > r1);
            }
        }
    }

    #[test]
    fn reward_checks_dimension() {
        assert!(matches!(
            add_reward(&zero_disc(3), &[0.0]),
            Err(AddError::Dimension { expected: 3, got: 1 })
        ));
    }

    #[test]
    fn gp_mode_names_round_trip() {
        for m in GpMode::ALL {
            assert_eq!(m.as_str().parse::<GpMode>().unwrap(), m);
            let json = serde_json::to_string(&m).unwrap();
            assert_eq!(json, format!("\"{}\"", m.as_str()));
        }
        assert!("lipschitz".parse::<GpMode>().is_err());
    }

    #[test]
    fn loss_of_constant_discriminator_is_two_ln2() {
        let d = zero_disc(2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let obj = disc_loss(&d, &batch(1, 5, 2), GpMode::None, 0.0, &mut rng).unwrap();
        assert!((obj.loss_value().unwrap() - 2.0 * std::f64::consts::LN_2).abs() < 1e-12);
        assert_eq!(obj.positive_rows, 1);
    }

    #[test]
    fn zero_lambda_matches_mode_none() {
        let d = random_disc(3, 1);
        let negs = batch(2, 6, 3);
        let mut base = disc_loss(&d, &negs, GpMode::None, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let base_loss = base.loss_value().unwrap();
        let base_grads = base.gradients().unwrap();
        for mode in GpMode::ALL {
            let mut obj = disc_loss(&d, &negs, mode, 0.0, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
            assert_eq!(obj.loss_value().unwrap(), base_loss);
            assert_eq!(obj.gradients().unwrap(), base_grads);
        }
    }

    #[test]
    fn loss_is_invariant_to_negative_order() {
        let d = random_disc(3, 4);
        let negs = batch(5, 8, 3);
        let mut rev = negs.clone();
        rev.reverse();
        let a = disc_loss(&d, &negs, GpMode::Neg, 0.5, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let b = disc_loss(&d, &rev, GpMode::Neg, 0.5, &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        assert_eq!(a.loss_value().unwrap(), b.loss_value().unwrap());
    }

    #[test]
    fn empty_batch_and_bad_lambda_are_errors() {
        let d = zero_disc(2);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let empty: Vec<Vec<f64>> = Vec::new();
        assert!(matches!(
            disc_loss(&d, &empty, GpMode::None, 0.0, &mut rng),
            Err(AddError::EmptyBatch)
        ));
        assert!(matches!(
            disc_loss(&d, &batch(0, 2, 2), GpMode::Neg, -1.0, &mut rng),
            Err(AddError::InvalidLambda(_))
        ));
        assert!(matches!(
            gradient_penalty(&d, &empty, GpMode::Neg, &mut rng),
            Err(AddError::EmptyBatch)
        ));
        assert!(gradient_penalty(&d, &empty, GpMode::Pos, &mut rng).is_ok());
    }

    #[test]
    fn constant_discriminator_penalties() {
        let d = zero_disc(3);
        let negs = batch(3, 4, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for mode in [GpMode::None, GpMode::Neg, GpMode::Pos, GpMode::Both] {
            let p = gradient_penalty(&d, &negs, mode, &mut rng).unwrap();
            assert_eq!(p.value().unwrap(), 0.0, "{mode}");
        }
        let w = gradient_penalty(&d, &negs, GpMode::WganGp, &mut rng).unwrap();
        assert!((w.value().unwrap() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn positive_penalty_of_linear_logit() {
        // logit = w . delta, D = sigmoid(logit); at 0 the slope is 1/4.
        let w = [0.3, -1.2, 2.0];
        let mut net = Mlp::new(&[3, 1], Activation::Identity, 0).unwrap();
        net.load_flat(&[w[0], w[1], w[2], 0.0]).unwrap();
        let d = Discriminator::new(net).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let p = gradient_penalty(&d, &batch(0, 2, 3), GpMode::Pos, &mut rng).unwrap();
        let norm_sq: f64 = w.iter().map(|v| v * v).sum();
        assert!((p.value().unwrap() - norm_sq / 16.0).abs() < 1e-14);
    }

    #[test]
    fn both_is_sum_of_pos_and_neg() {
        let d = random_disc(4, 8);
        let negs = batch(6, 10, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pos = gradient_penalty(&d, &negs, GpMode::Pos, &mut rng).unwrap().value().unwrap();
        let neg = gradient_penalty(&d, &negs, GpMode::Neg, &mut rng).unwrap().value().unwrap();
        let both = gradient_penalty(&d, &negs, GpMode::Both, &mut rng).unwrap().value().unwrap();
        assert_eq!(both, pos + neg);
    }
}
