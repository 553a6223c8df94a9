use rand::Rng;
use rand_distr::StandardNormal;

use crate::autodiff::{Graph, NodeId, Tensor};
use crate::nets::{BoundMlp, Mlp, NetsError};
use crate::scalar::Scalar;

/// `pi(a | s) = N(mu(s), diag(sigma^2))` with a fixed, state-independent sigma.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussianPolicy<S> {
    mean: Mlp<S>,
    sigma: Vec<S>,
}

impl<S: Scalar> GaussianPolicy<S> {
    pub fn new(mean: Mlp<S>, sigma: Vec<S>) -> Result<Self, NetsError> {
        if sigma.len() != mean.output_dim() {
            return Err(NetsError::Dimension {
                what: "policy sigma",
                expected: mean.output_dim(),
                got: sigma.len(),
            });
        }
        if sigma.iter().any(|s| !(*s > S::zero()) || !s.is_finite()) {
            return Err(NetsError::InvalidSigma);
        }
        Ok(Self { mean, sigma })
    }

    pub fn mean_net(&self) -> &Mlp<S> {
        &self.mean
    }

    pub fn mean_net_mut(&mut self) -> &mut Mlp<S> {
        &mut self.mean
    }

    pub fn sigma(&self) -> &[S] {
        &self.sigma
    }

    pub fn action_dim(&self) -> usize {
        self.sigma.len()
    }

    pub fn mean_action(&self, obs: &[S]) -> Result<Vec<S>, NetsError> {
        self.mean.forward(obs)
    }

    /// `a = mu(s) + sigma * z` for a caller-supplied standard-normal draw `z`.
    pub fn sample_with_noise(&self, obs: &[S], noise: &[S]) -> Result<(Vec<S>, S), NetsError> {
        if noise.len() != self.action_dim() {
            return Err(NetsError::Dimension {
                what: "policy noise",
                expected: self.action_dim(),
                got: noise.len(),
            });
        }
        let mu = self.mean.forward(obs)?;
        let action: Vec<S> = mu
            .iter()
            .zip(&self.sigma)
            .zip(noise)
            .map(|((m, s), z)| *m + *s * *z)
            .collect();
        let log_prob = self.log_density(&mu, &action);
        Ok((action, log_prob))
    }

    pub fn sample<R: Rng + ?Sized>(&self, obs: &[S], rng: &mut R) -> Result<(Vec<S>, S), NetsError> {
        let noise: Vec<S> = (0..self.action_dim())
            .map(|_| S::lit(rng.sample::<f64, _>(StandardNormal)))
            .collect();
        self.sample_with_noise(obs, &noise)
    }

    pub fn log_prob(&self, obs: &[S], action: &[S]) -> Result<S, NetsError> {
        if action.len() != self.action_dim() {
            return Err(NetsError::Dimension {
                what: "action",
                expected: self.action_dim(),
                got: action.len(),
            });
        }
        let mu = self.mean.forward(obs)?;
        Ok(self.log_density(&mu, action))
    }

    fn log_density(&self, mu: &[S], action: &[S]) -> S {
        let half = S::lit(0.5);
        let mut lp = -half * S::lit(self.action_dim() as f64) * S::lit(std::f64::consts::TAU).ln();
        for ((m, a), s) in mu.iter().zip(action).zip(&self.sigma) {
            let z = (*a - *m) / *s;
            lp -= half * z * z + s.ln();
        }
        lp
    }

    /// Log-densities of `actions` (`[batch, action_dim]`) under the policy
    /// evaluated at `obs` (a `[batch, obs_dim]` node), as a `[batch, 1]` node.
    pub fn log_prob_graph(
        &self,
        g: &mut Graph<S>,
        bound: &BoundMlp,
        obs: NodeId,
        actions: &Tensor<S>,
    ) -> Result<NodeId, NetsError> {
        let batch = actions.rows();
        let mu = bound.apply(g, obs)?;
        let a = g.constant(actions.clone())?;
        let diff = g.sub(a, mu)?;
        let inv_sigma: Vec<S> = (0..batch)
            .flat_map(|_| self.sigma.iter().map(|s| S::one() / *s))
            .collect();
        let inv_sigma = g.constant(Tensor::matrix(batch, self.action_dim(), inv_sigma)?)?;
        let z = g.mul(diff, inv_sigma)?;
        let z2 = g.square(z)?;
        let quad = g.row_sums(z2)?;
        let norm: S = self.sigma.iter().map(|s| s.ln()).sum::<S>()
            + S::lit(0.5 * self.action_dim() as f64) * S::lit(std::f64::consts::TAU).ln();
        Ok(g.affine(quad, -S::lit(0.5), -norm)?)
    }
}
