use rand::Rng;

use crate::add::{AddError, GpMode};
use crate::autodiff::{Graph, NodeId, Tensor};
use crate::nets::{BoundMlp, Discriminator};
use crate::scalar::Scalar;

/// Inside `sqrt` for the Lipschitz penalty, which is otherwise not
/// differentiable where the input gradient vanishes.
const NORM_EPS: f64 = 1e-12;

/// The discriminator objective recorded on a graph, ready for
/// differentiation w.r.t. the discriminator parameters.
#[derive(Debug)]
pub struct DiscObjective<S> {
    pub graph: Graph<S>,
    /// Discriminator parameter nodes, `[w0, b0, w1, b1, ..]`.
    pub params: Vec<NodeId>,
    /// `-[log D(0) + mean log(1 - D(delta))] + lambda * penalty`
    pub loss: NodeId,
    pub penalty: NodeId,
    /// `D(0)`, `[1, 1]`.
    pub d_positive: NodeId,
    /// `D(delta)` per negative, `[batch, 1]`.
    pub d_negative: NodeId,
    /// Rows of the positive input. The only positive is the zero vector, so
    /// this is always 1; kept as a measured quantity for instrumentation.
    pub positive_rows: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DiscStats {
    pub loss: f64,
    pub penalty: f64,
    pub d_positive: f64,
    pub d_negative_mean: f64,
}

impl<S: Scalar> DiscObjective<S> {
    pub fn loss_value(&self) -> Result<S, AddError> {
        Ok(self.graph.scalar(self.loss)?)
    }

    pub fn stats(&self) -> DiscStats {
        let g = &self.graph;
        let neg = g.value(self.d_negative);
        DiscStats {
            loss: g.value(self.loss).data()[0].to_f64_lossy(),
            penalty: g.value(self.penalty).data()[0].to_f64_lossy(),
            d_positive: g.value(self.d_positive).data()[0].to_f64_lossy(),
            d_negative_mean: neg.sum().to_f64_lossy() / neg.len() as f64,
        }
    }

    /// Gradient of the loss w.r.t. each discriminator parameter.
    pub fn gradients(&mut self) -> Result<Vec<Tensor<S>>, AddError> {
        let grads = self.graph.gradient(self.loss, &self.params)?;
        Ok(grads.iter().map(|&id| self.graph.value(id).clone()).collect())
    }
}

/// A gradient penalty evaluated on its own graph.
#[derive(Debug)]
pub struct Penalty<S> {
    pub graph: Graph<S>,
    pub params: Vec<NodeId>,
    pub value: NodeId,
}

impl<S: Scalar> Penalty<S> {
    pub fn value(&self) -> Result<S, AddError> {
        Ok(self.graph.scalar(self.value)?)
    }

    pub fn gradients(&mut self) -> Result<Vec<Tensor<S>>, AddError> {
        let grads = self.graph.gradient(self.value, &self.params)?;
        Ok(grads.iter().map(|&id| self.graph.value(id).clone()).collect())
    }
}

fn batch_tensor<S: Scalar, V: AsRef<[f64]>>(
    rows: &[V],
    dim: usize,
) -> Result<Tensor<S>, AddError> {
    let mut data = Vec::with_capacity(rows.len() * dim);
    for row in rows {
        let row = row.as_ref();
        if row.len() != dim {
            return Err(AddError::Dimension {
                expected: dim,
                got: row.len(),
            });
        }
        data.extend(row.iter().map(|&v| S::lit(v)));
    }
    Ok(Tensor::matrix(rows.len(), dim, data)?)
}

struct Scored {
    input: NodeId,
    score: NodeId,
}

fn score_rows<S: Scalar>(
    g: &mut Graph<S>,
    d: &Discriminator<S>,
    bound: &BoundMlp,
    rows: Tensor<S>,
) -> Result<Scored, AddError> {
    let input = g.input(rows)?;
    let score = d.score_graph(g, bound, input)?;
    Ok(Scored { input, score })
}

/// Mean over rows of `||d D / d x_row||^2`, or of `(||.|| - 1)^2` when
/// `lipschitz` is set. Rows of the batch are scored independently, so the
/// gradient of the summed score w.r.t. the input is the per-row gradient.
fn input_gradient_penalty<S: Scalar>(
    g: &mut Graph<S>,
    scored: &Scored,
    lipschitz: bool,
) -> Result<NodeId, AddError> {
    let total = g.sum(scored.score)?;
    let grad = g.gradient(total, &[scored.input])?[0];
    let sq = g.square(grad)?;
    let per_row = g.row_sums(sq)?;
    let per_row = if lipschitz {
        let norm = g.affine(per_row, S::one(), S::lit(NORM_EPS))?;
        let norm = g.sqrt(norm)?;
        let dev = g.affine(norm, S::one(), -S::one())?;
        g.square(dev)?
    } else {
        per_row
    };
    Ok(g.mean(per_row)?)
}

#[allow(clippy::too_many_arguments)]
fn penalty_term<S: Scalar, V: AsRef<[f64]>, R: Rng + ?Sized>(
    g: &mut Graph<S>,
    d: &Discriminator<S>,
    bound: &BoundMlp,
    positive: &Scored,
    negative: &Scored,
    negatives: &[V],
    mode: GpMode,
    rng: &mut R,
) -> Result<NodeId, AddError> {
    match mode {
        GpMode::None => Ok(g.constant(Tensor::scalar(S::zero()))?),
        GpMode::Neg => input_gradient_penalty(g, negative, false),
        GpMode::Pos => input_gradient_penalty(g, positive, false),
        GpMode::Both => {
            let pos = input_gradient_penalty(g, positive, false)?;
            let neg = input_gradient_penalty(g, negative, false)?;
            Ok(g.add(pos, neg)?)
        }
        GpMode::WganGp => {
            // Interpolations between the positive (0) and each negative.
            let dim = d.input_dim();
            let mixed: Vec<Vec<f64>> = negatives
                .iter()
                .map(|row| {
                    let u: f64 = rng.gen_range(0.0..=1.0);
                    row.as_ref().iter().map(|v| u * v).collect()
                })
                .collect();
            let interp = score_rows(g, d, bound, batch_tensor(&mixed, dim)?)?;
            input_gradient_penalty(g, &interp, true)
        }
    }
}

/// The discriminator objective as a minimization:
///
/// `-[log D(0) + mean_j log(1 - D(delta_j))] + lambda_gp * GP(mode)`
///
/// The zero vector is the single positive sample, whatever the batch size.
/// With `lambda_gp == 0` the penalty is evaluated (for logging) but not added.
pub fn disc_loss<S: Scalar, V: AsRef<[f64]>, R: Rng + ?Sized>(
    d: &Discriminator<S>,
    negatives: &[V],
    mode: GpMode,
    lambda_gp: f64,
    rng: &mut R,
) -> Result<DiscObjective<S>, AddError> {
    if negatives.is_empty() {
        return Err(AddError::EmptyBatch);
    }
    if !(lambda_gp >= 0.0) || !lambda_gp.is_finite() {
        return Err(AddError::InvalidLambda(lambda_gp));
    }
    let dim = d.input_dim();
    let mut g = Graph::new();
    let bound = d.net().bind(&mut g)?;

    let positive_rows = 1;
    let positive = score_rows(&mut g, d, &bound, Tensor::zeros(vec![positive_rows, dim]))?;
    let negative = score_rows(&mut g, d, &bound, batch_tensor(negatives, dim)?)?;

    let log_pos = g.log(positive.score)?;
    let log_pos = g.sum(log_pos)?;
    let one_minus = g.affine(negative.score, -S::one(), S::one())?;
    let log_neg = g.log(one_minus)?;
    let log_neg = g.mean(log_neg)?;
    let objective = g.add(log_pos, log_neg)?;
    let mut loss = g.neg(objective)?;

    let penalty = penalty_term(&mut g, d, &bound, &positive, &negative, negatives, mode, rng)?;
    if lambda_gp > 0.0 && mode != GpMode::None {
        let weighted = g.scale(penalty, S::lit(lambda_gp))?;
        loss = g.add(loss, weighted)?;
    }

    Ok(DiscObjective {
        params: bound.params().to_vec(),
        loss,
        penalty,
        d_positive: positive.score,
        d_negative: negative.score,
        positive_rows,
        graph: g,
    })
}

/// The gradient penalty alone:
///
/// - `None`: 0
/// - `Neg`: mean over negatives of `||grad D(delta)||^2`
/// - `Pos`: `||grad D(0)||^2`
/// - `Both`: `Pos + Neg`
/// - `WganGp`: mean over `u * delta` (`u ~ U[0, 1]` per sample) of `(||grad D|| - 1)^2`
///
/// Gradients are of the squashed (and clamped) score w.r.t. its input.
pub fn gradient_penalty<S: Scalar, V: AsRef<[f64]>, R: Rng + ?Sized>(
    d: &Discriminator<S>,
    negatives: &[V],
    mode: GpMode,
    rng: &mut R,
) -> Result<Penalty<S>, AddError> {
    if negatives.is_empty() && mode.uses_negatives() {
        return Err(AddError::EmptyBatch);
    }
    let dim = d.input_dim();
    let mut g = Graph::new();
    let bound = d.net().bind(&mut g)?;
    let positive = score_rows(&mut g, d, &bound, Tensor::zeros(vec![1, dim]))?;
    let negative = if negatives.is_empty() {
        // Pos / None only; the negative branch is never read.
        score_rows(&mut g, d, &bound, Tensor::zeros(vec![1, dim]))?
    } else {
        score_rows(&mut g, d, &bound, batch_tensor(negatives, dim)?)?
    };
    let value = penalty_term(&mut g, d, &bound, &positive, &negative, negatives, mode, rng)?;
    Ok(Penalty {
        params: bound.params().to_vec(),
        value,
        graph: g,
    })
}
