use crate::autodiff::{sigmoid, Graph, NodeId};
use crate::nets::{BoundMlp, Mlp, NetsError};
use crate::scalar::Scalar;

/// Scores are clamped to `[SCORE_EPS, 1 - SCORE_EPS]` so `log D` and
/// `log(1 - D)` stay finite.
pub const SCORE_EPS: f64 = 1e-6;

/// Scalar-output network squashed by a logistic into a probability that its
/// input is the ideal (all-zero) differential.
#[derive(Clone, Debug, PartialEq)]
pub struct Discriminator<S> {
    net: Mlp<S>,
}

impl<S: Scalar> Discriminator<S> {
    pub fn new(net: Mlp<S>) -> Result<Self, NetsError> {
        if net.output_dim() != 1 {
            return Err(NetsError::Dimension {
                what: "discriminator output",
                expected: 1,
                got: net.output_dim(),
            });
        }
        Ok(Self { net })
    }

    pub fn net(&self) -> &Mlp<S> {
        &self.net
    }

    pub fn net_mut(&mut self) -> &mut Mlp<S> {
        &mut self.net
    }

    pub fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    /// Pre-squash output.
    pub fn logit(&self, delta: &[S]) -> Result<S, NetsError> {
        Ok(self.net.forward(delta)?[0])
    }

    pub fn score(&self, delta: &[S]) -> Result<S, NetsError> {
        let eps = S::lit(SCORE_EPS);
        Ok(sigmoid(self.logit(delta)?).max(eps).min(S::one() - eps))
    }

    /// Clamped scores of a `[batch, dim]` input node as a `[batch, 1]` node.
    pub fn score_graph(
        &self,
        g: &mut Graph<S>,
        bound: &BoundMlp,
        input: NodeId,
    ) -> Result<NodeId, NetsError> {
        let eps = S::lit(SCORE_EPS);
        let logits = bound.apply(g, input)?;
        let d = g.sigmoid(logits)?;
        Ok(g.clamp(d, eps, S::one() - eps)?)
    }
}
