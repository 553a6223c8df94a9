use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::{Graph, NodeId, Tensor};
use crate::nets::NetsError;
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Identity,
}

impl Activation {
    #[inline]
    pub fn apply<S: Scalar>(self, x: S) -> S {
        match self {
            Activation::Relu => x.max(S::zero()),
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }
}

/// Fully connected network. Hidden layers use the configured activation, the
/// output layer is linear. Weights are stored `[fan_in, fan_out]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp<S> {
    layer_sizes: Vec<usize>,
    weights: Vec<Tensor<S>>,
    biases: Vec<Tensor<S>>,
    activations: Vec<Activation>,
    hidden_activation: Activation,
    seed: u64,
}

/// Parameter nodes of an [`Mlp`] bound into one graph. Applying it to several
/// inputs shares the parameters, so their gradients accumulate.
#[derive(Clone, Debug)]
pub struct BoundMlp {
    params: Vec<NodeId>,
    activations: Vec<Activation>,
}

impl BoundMlp {
    /// Parameter nodes in `[w0, b0, w1, b1, ..]` order.
    pub fn params(&self) -> &[NodeId] {
        &self.params
    }

    pub fn apply<S: Scalar>(&self, g: &mut Graph<S>, input: NodeId) -> Result<NodeId, NetsError> {
        let mut h = input;
        for (layer, act) in self.activations.iter().enumerate() {
            let z = g.matmul(h, self.params[2 * layer])?;
            let z = g.add(z, self.params[2 * layer + 1])?;
            h = match act {
                Activation::Relu => g.relu(z)?,
                Activation::Tanh => g.tanh(z)?,
                Activation::Identity => z,
            };
        }
        Ok(h)
    }
}

impl<S: Scalar> Mlp<S> {
    /// Uniform fan-in initialization: `W ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in))`,
    /// zero biases. Deterministic in `seed`.
    pub fn new(layer_sizes: &[usize], activation: Activation, seed: u64) -> Result<Self, NetsError> {
        if layer_sizes.len() < 2 {
            return Err(NetsError::TooFewLayers(layer_sizes.len()));
        }
        if layer_sizes.contains(&0) {
            return Err(NetsError::ZeroWidth);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_layers = layer_sizes.len() - 1;
        let mut weights = Vec::with_capacity(n_layers);
        let mut biases = Vec::with_capacity(n_layers);
        let mut activations = Vec::with_capacity(n_layers);
        for (i, pair) in layer_sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let data = (0..fan_in * fan_out)
                .map(|_| S::lit(rng.gen_range(-bound..bound)))
                .collect();
            weights.push(Tensor::new(vec![fan_in, fan_out], data)?);
            biases.push(Tensor::zeros(vec![fan_out]));
            activations.push(if i + 1 == n_layers {
                Activation::Identity
            } else {
                activation
            });
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            weights,
            biases,
            activations,
            hidden_activation: activation,
            seed,
        })
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("at least two layers")
    }

    pub fn hidden_activation(&self) -> Activation {
        self.hidden_activation
    }

    pub fn activations(&self) -> &[Activation] {
        &self.activations
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn weight(&self, layer: usize) -> &Tensor<S> {
        &self.weights[layer]
    }

    pub fn bias(&self, layer: usize) -> &Tensor<S> {
        &self.biases[layer]
    }

    /// Parameters in `[w0, b0, w1, b1, ..]` order.
    pub fn parameters(&self) -> Vec<&Tensor<S>> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w, b])
            .collect()
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Tensor<S>> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w, b])
            .collect()
    }

    pub fn num_parameters(&self) -> usize {
        self.parameters().iter().map(|p| p.len()).sum()
    }

    pub fn flatten(&self) -> Vec<S> {
        self.parameters()
            .iter()
            .flat_map(|p| p.data().iter().copied())
            .collect()
    }

    pub fn load_flat(&mut self, flat: &[S]) -> Result<(), NetsError> {
        if flat.len() != self.num_parameters() {
            return Err(NetsError::Dimension {
                what: "flat parameters",
                expected: self.num_parameters(),
                got: flat.len(),
            });
        }
        let mut offset = 0;
        for p in self.parameters_mut() {
            let n = p.len();
            p.data_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.parameters().iter().all(|p| p.is_finite())
    }

    pub fn bind(&self, g: &mut Graph<S>) -> Result<BoundMlp, NetsError> {
        let mut params = Vec::with_capacity(2 * self.weights.len());
        for p in self.parameters() {
            params.push(g.param(p.clone())?);
        }
        Ok(BoundMlp {
            params,
            activations: self.activations.clone(),
        })
    }

    /// Evaluates one sample without recording a graph.
    pub fn forward(&self, input: &[S]) -> Result<Vec<S>, NetsError> {
        if input.len() != self.input_dim() {
            return Err(NetsError::Dimension {
                what: "network input",
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let mut h = input.to_vec();
        for ((w, b), act) in self.weights.iter().zip(&self.biases).zip(&self.activations) {
            let fan_out = w.cols();
            let mut next = b.data().to_vec();
            for (i, &x) in h.iter().enumerate() {
                if x == S::zero() {
                    continue;
                }
                for (o, &wij) in next.iter_mut().zip(&w.data()[i * fan_out..(i + 1) * fan_out]) {
                    *o += x * wij;
                }
            }
            for v in next.iter_mut() {
                *v = act.apply(*v);
            }
            h = next;
        }
        Ok(h)
    }

    /// Evaluates rows of `inputs` (row-major, `input_dim` wide) and returns
    /// the outputs row-major.
    pub fn forward_batch(&self, inputs: &[S]) -> Result<Vec<S>, NetsError> {
        let d = self.input_dim();
        if !inputs.len().is_multiple_of(d) {
            return Err(NetsError::Dimension {
                what: "batched network input",
                expected: d,
                got: inputs.len() % d,
            });
        }
        let mut out = Vec::with_capacity(inputs.len() / d * self.output_dim());
        for row in inputs.chunks(d) {
            out.extend(self.forward(row)?);
        }
        Ok(out)
    }

    /// Rebuilds a network from checkpointed parts.
    pub(crate) fn from_parts(
        layer_sizes: &[usize],
        activation: Activation,
        seed: u64,
        flat: &[S],
    ) -> Result<Self, NetsError> {
        let mut mlp = Self::new(layer_sizes, activation, seed)?;
        mlp.load_flat(flat)?;
        Ok(mlp)
    }
}
