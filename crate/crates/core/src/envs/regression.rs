//! One-dimensional regression posed as an N-objective problem: every
//! dataset point's prediction error is one entry of the differential.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::add::{disc_loss, GpMode};
use crate::autodiff::{Graph, Tensor};
use crate::envs::EnvError;
use crate::nets::{Activation, Adam, Discriminator, Mlp, SgdMomentum};

pub const DOMAIN: (f64, f64) = (0.0, 4.3);

pub fn target_fn(x: f64) -> f64 {
    x.powf(2.5).cos()
}

/// Fixed dataset `(x_i, f(x_i))`, `x_i ~ U[0, 4.3]`, sorted by `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionTask {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl RegressionTask {
    pub fn sample(n: usize, seed: u64) -> Result<Self, EnvError> {
        if n == 0 {
            return Err(EnvError::InvalidConfig("regression dataset must be non-empty".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut xs: Vec<f64> = (0..n).map(|_| rng.gen_range(DOMAIN.0..=DOMAIN.1)).collect();
        xs.sort_by(f64::total_cmp);
        let ys = xs.iter().map(|&x| target_fn(x)).collect();
        Ok(Self { xs, ys })
    }

    pub fn from_points(xs: Vec<f64>) -> Self {
        let ys = xs.iter().map(|&x| target_fn(x)).collect();
        Self { xs, ys }
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn predict(&self, g: &Mlp<f64>) -> Result<Vec<f64>, EnvError> {
        let out = g.forward_batch(&self.xs)?;
        Ok(out)
    }

    /// `[f(x_i) - G(x_i)]`
    pub fn delta(&self, g: &Mlp<f64>) -> Result<Vec<f64>, EnvError> {
        Ok(self.predict(g)?.iter().zip(&self.ys).map(|(p, y)| y - p).collect())
    }

    pub fn mse(&self, g: &Mlp<f64>) -> Result<f64, EnvError> {
        let d = self.delta(g)?;
        Ok(d.iter().map(|e| e * e).sum::<f64>() / d.len() as f64)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegressionObjective {
    /// `G` minimizes `-log D(delta)` against a trained discriminator.
    Adversarial,
    /// Plain mean squared error, the reference run.
    Supervised,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Adam,
    SgdMomentum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegressionHyper {
    pub points: usize,
    pub steps: usize,
    pub lambda_gp: f64,
    pub gp_mode: GpMode,
    pub g_lr: f64,
    pub d_lr: f64,
    pub g_hidden: Vec<usize>,
    pub d_hidden: Vec<usize>,
    pub activation: Activation,
    pub optimizer: OptimizerKind,
    /// Discriminator steps per generator step.
    pub d_steps: usize,
    /// Record MSE and input gradients every this many steps (and at the end).
    pub log_every: usize,
    pub seed: u64,
}

impl Default for RegressionHyper {
    fn default() -> Self {
        Self {
            points: 512,
            steps: 6000,
            lambda_gp: 0.1,
            gp_mode: GpMode::Neg,
            g_lr: 1e-4,
            d_lr: 1e-5,
            g_hidden: vec![128, 64],
            d_hidden: vec![128, 64],
            activation: Activation::Relu,
            optimizer: OptimizerKind::SgdMomentum,
            d_steps: 1,
            log_every: 500,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionLog {
    pub step: usize,
    pub mse: f64,
    pub g_loss: f64,
    pub d_loss: f64,
    pub d_zero: f64,
    pub d_delta: f64,
    pub penalty: f64,
}

#[derive(Clone, Debug)]
pub struct RegressionOutcome {
    pub task: RegressionTask,
    pub generator: Mlp<f64>,
    pub discriminator: Option<Discriminator<f64>>,
    pub log: Vec<RegressionLog>,
    /// `(step, |dD/d delta_i|)` per sample; adversarial runs only.
    pub input_gradients: Vec<(usize, Vec<f64>)>,
    pub final_mse: f64,
}

enum Opt {
    Adam(Adam<f64>),
    Sgd(SgdMomentum<f64>),
}

impl Opt {
    fn new(kind: OptimizerKind, lr: f64) -> Self {
        match kind {
            OptimizerKind::Adam => Opt::Adam(Adam::new(lr)),
            OptimizerKind::SgdMomentum => Opt::Sgd(SgdMomentum::new(lr, 0.9)),
        }
    }

    fn step(&mut self, net: &mut Mlp<f64>, grads: &[Tensor<f64>]) -> Result<(), EnvError> {
        match self {
            Opt::Adam(o) => o.step(net, grads)?,
            Opt::Sgd(o) => o.step(net, grads)?,
        }
        Ok(())
    }
}

/// `|dD/d delta_i|` for each entry of `delta`.
pub fn score_input_gradient(d: &Discriminator<f64>, delta: &[f64]) -> Result<Vec<f64>, EnvError> {
    let mut g = Graph::new();
    let bound = d.net().bind(&mut g)?;
    let x = g.input(Tensor::matrix(1, delta.len(), delta.to_vec())?)?;
    let s = d.score_graph(&mut g, &bound, x)?;
    let s = g.sum(s)?;
    let grad = g.gradient(s, &[x])?[0];
    Ok(g.value(grad).data().iter().map(|v| v.abs()).collect())
}

fn layer_sizes(input: usize, hidden: &[usize], output: usize) -> Vec<usize> {
    let mut sizes = vec![input];
    sizes.extend_from_slice(hidden);
    sizes.push(output);
    sizes
}

fn divergence(what: &str, step: usize, err: impl std::fmt::Display) -> EnvError {
    EnvError::Divergence(format!("{what} at step {step}: {err}"))
}

/// Trains `G` on the dataset, adversarially (alternating discriminator and
/// generator steps) or with plain MSE.
pub fn regression_train(hyper: &RegressionHyper, objective: RegressionObjective) -> Result<RegressionOutcome, EnvError> {
    if hyper.log_every == 0 || hyper.d_steps == 0 {
        return Err(EnvError::InvalidConfig("log_every and d_steps must be positive".into()));
    }
    let task = RegressionTask::sample(hyper.points, hyper.seed)?;
    let n = task.len();
    let mut gen = Mlp::new(&layer_sizes(1, &hyper.g_hidden, 1), hyper.activation, hyper.seed.wrapping_add(1))?;
    let mut disc = match objective {
        RegressionObjective::Adversarial => Some(Discriminator::new(Mlp::new(
            &layer_sizes(n, &hyper.d_hidden, 1),
            hyper.activation,
            hyper.seed.wrapping_add(2),
        )?)?),
        RegressionObjective::Supervised => None,
    };
    let mut g_opt = Opt::new(hyper.optimizer, hyper.g_lr);
    let mut d_opt = Opt::new(hyper.optimizer, hyper.d_lr);
    let mut rng = ChaCha8Rng::seed_from_u64(hyper.seed.wrapping_add(3));
    let xs = Tensor::matrix(n, 1, task.xs().to_vec())?;
    let ys = Tensor::matrix(n, 1, task.ys().to_vec())?;

    let mut log = Vec::new();
    let mut input_gradients = Vec::new();
    let mut last = RegressionLog {
        step: 0,
        mse: f64::NAN,
        g_loss: f64::NAN,
        d_loss: f64::NAN,
        d_zero: f64::NAN,
        d_delta: f64::NAN,
        penalty: 0.0,
    };

    for step in 0..=hyper.steps {
        if step % hyper.log_every == 0 || step == hyper.steps {
            let mse = task.mse(&gen)?;
            if !mse.is_finite() {
                return Err(divergence("generator", step, "non-finite prediction"));
            }
            if let Some(d) = &disc {
                input_gradients.push((step, score_input_gradient(d, &task.delta(&gen)?)?));
            }
            log.push(RegressionLog { step, mse, ..last.clone() });
        }
        if step == hyper.steps {
            break;
        }

        if let Some(d) = disc.as_mut() {
            for _ in 0..hyper.d_steps {
                let delta = task.delta(&gen)?;
                let mut obj = disc_loss(d, &[delta], hyper.gp_mode, hyper.lambda_gp, &mut rng)
                    .map_err(|e| divergence("discriminator", step, e))?;
                let stats = obj.stats();
                let grads = obj.gradients().map_err(|e| divergence("discriminator", step, e))?;
                d_opt.step(d.net_mut(), &grads)?;
                last.d_loss = stats.loss;
                last.d_zero = stats.d_positive;
                last.d_delta = stats.d_negative_mean;
                last.penalty = stats.penalty;
            }
        }

        let mut g = Graph::new();
        let bound = gen.bind(&mut g)?;
        let x = g.input(xs.clone())?;
        let y = g.constant(ys.clone())?;
        let pred = bound.apply(&mut g, x)?;
        let err = g.sub(y, pred)?;
        let loss = match &disc {
            Some(d) => {
                let row = g.transpose(err)?;
                let dbound = d.net().bind(&mut g)?;
                let score = d.score_graph(&mut g, &dbound, row)?;
                let lg = g.log(score)?;
                let lg = g.sum(lg)?;
                g.neg(lg)?
            }
            None => {
                let sq = g.square(err)?;
                g.mean(sq)?
            }
        };
        last.g_loss = g.scalar(loss)?;
        let grads = g
            .gradient(loss, bound.params())
            .map_err(|e| divergence("generator", step, e))?;
        let grads: Vec<Tensor<f64>> = grads.iter().map(|&id| g.value(id).clone()).collect();
        g_opt.step(&mut gen, &grads)?;
        if !gen.is_finite() {
            return Err(divergence("generator", step, "non-finite parameters"));
        }
    }

    let final_mse = task.mse(&gen)?;
    Ok(RegressionOutcome {
        task,
        generator: gen,
        discriminator: disc,
        log,
        input_gradients,
        final_mse,
    })
}

/// Mean of `values[i]` over the points with `lo <= x_i < hi`.
pub fn mean_over_range(xs: &[f64], values: &[f64], lo: f64, hi: f64) -> f64 {
    let sel: Vec<f64> = xs
        .iter()
        .zip(values)
        .filter(|(x, _)| **x >= lo && **x < hi)
        .map(|(_, v)| *v)
        .collect();
    sel.iter().sum::<f64>() / sel.len().max(1) as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_at_zero_is_one() {
        assert_eq!(target_fn(0.0), 1.0);
        let t = RegressionTask::from_points(vec![0.0, 1.0]);
        assert_eq!(t.ys(), &[1.0, 1.0f64.cos()]);
    }

    #[test]
    fn dataset_is_deterministic_and_in_range() {
        let a = RegressionTask::sample(512, 3).unwrap();
        let b = RegressionTask::sample(512, 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 512);
        assert!(a.xs().iter().all(|x| (0.0..=4.3).contains(x)));
        assert!(a.xs().windows(2).all(|w| w[0] <= w[1]));
        assert!(RegressionTask::sample(0, 0).is_err());
    }

    #[test]
    fn perfect_generator_loss_is_log_d_zero() {
        // A dataset on which f is constant 1, fit exactly by a zero-weight net with bias 1.
        let task = RegressionTask::from_points(vec![0.0; 4]);
        let mut g = Mlp::new(&[1, 1], Activation::Identity, 0).unwrap();
        g.load_flat(&[0.0, 1.0]).unwrap();
        let delta = task.delta(&g).unwrap();
        assert!(delta.iter().all(|d| *d == 0.0));
        let d = Discriminator::new(Mlp::new(&[4, 8, 1], Activation::Relu, 1).unwrap()).unwrap();
        let d0 = d.score(&[0.0; 4]).unwrap();
        let mut gr = Graph::new();
        let bound = d.net().bind(&mut gr).unwrap();
        let x = gr.input(Tensor::matrix(1, 4, delta).unwrap()).unwrap();
        let s = d.score_graph(&mut gr, &bound, x).unwrap();
        let l = gr.log(s).unwrap();
        assert!((-gr.scalar(l).unwrap() - (-d0.ln())).abs() < 1e-15);
    }

    #[test]
    fn supervised_run_reduces_error() {
        let hyper = RegressionHyper {
            points: 64,
            steps: 300,
            g_lr: 1e-2,
            g_hidden: vec![16, 16],
            log_every: 100,
            ..RegressionHyper::default()
        };
        let out = regression_train(&hyper, RegressionObjective::Supervised).unwrap();
        assert!(out.final_mse < out.log[0].mse);
        assert!(out.discriminator.is_none());
        assert_eq!(out.log.len(), 4);
    }

    #[test]
    fn adversarial_run_records_gradients() {
        let hyper = RegressionHyper {
            points: 32,
            steps: 20,
            g_hidden: vec![8],
            d_hidden: vec![8],
            log_every: 10,
            ..RegressionHyper::default()
        };
        let out = regression_train(&hyper, RegressionObjective::Adversarial).unwrap();
        assert_eq!(out.input_gradients.len(), 3);
        assert!(out.input_gradients.iter().all(|(_, g)| g.len() == 32));
        assert!(out.final_mse.is_finite());
    }

    #[test]
    fn range_mean() {
        let xs = [0.5, 1.5, 3.5, 4.0];
        let v = [1.0, 2.0, 3.0, 5.0];
        assert_eq!(mean_over_range(&xs, &v, 3.0, f64::INFINITY), 4.0);
        assert_eq!(mean_over_range(&xs, &v, 0.0, 1.0), 1.0);
    }
}
