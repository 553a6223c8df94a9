use crate::autodiff::Tensor;
use crate::nets::{Mlp, NetsError};
use crate::scalar::Scalar;

/// Heavy-ball SGD: `v <- momentum * v + g; p <- p - lr * v`.
#[derive(Clone, Debug, PartialEq)]
pub struct SgdMomentum<S> {
    pub lr: S,
    pub momentum: S,
    velocity: Vec<Tensor<S>>,
}

impl<S: Scalar> SgdMomentum<S> {
    pub fn new(lr: S, momentum: S) -> Self {
        Self {
            lr,
            momentum,
            velocity: Vec::new(),
        }
    }

    pub fn step(&mut self, net: &mut Mlp<S>, grads: &[Tensor<S>]) -> Result<(), NetsError> {
        let mut params = net.parameters_mut();
        if params.len() != grads.len() {
            return Err(NetsError::Dimension {
                what: "gradient list",
                expected: params.len(),
                got: grads.len(),
            });
        }
        if self.velocity.is_empty() {
            self.velocity = grads.iter().map(|g| Tensor::zeros(g.shape().to_vec())).collect();
        }
        for ((p, g), v) in params.iter_mut().zip(grads).zip(self.velocity.iter_mut()) {
            if p.shape() != g.shape() || v.shape() != g.shape() {
                return Err(NetsError::Dimension {
                    what: "gradient shape",
                    expected: p.len(),
                    got: g.len(),
                });
            }
            for ((pi, gi), vi) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(v.data_mut().iter_mut())
            {
                *vi = self.momentum * *vi + *gi;
                *pi -= self.lr * *vi;
            }
        }
        Ok(())
    }
}

/// Adam with bias correction.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam<S> {
    pub lr: S,
    pub beta1: S,
    pub beta2: S,
    pub eps: S,
    m: Vec<Tensor<S>>,
    v: Vec<Tensor<S>>,
    t: i32,
}

impl<S: Scalar> Adam<S> {
    pub fn new(lr: S) -> Self {
        Self {
            lr,
            beta1: S::lit(0.9),
            beta2: S::lit(0.999),
            eps: S::lit(1e-8),
            m: Vec::new(),
            v: Vec::new(),
            t: 0,
        }
    }

    pub fn step(&mut self, net: &mut Mlp<S>, grads: &[Tensor<S>]) -> Result<(), NetsError> {
        let mut params = net.parameters_mut();
        if params.len() != grads.len() {
            return Err(NetsError::Dimension {
                what: "gradient list",
                expected: params.len(),
                got: grads.len(),
            });
        }
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| Tensor::zeros(g.shape().to_vec())).collect();
            self.v = self.m.clone();
        }
        self.t += 1;
        let c1 = S::one() - self.beta1.powi(self.t);
        let c2 = S::one() - self.beta2.powi(self.t);
        for (((p, g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut())
            .zip(self.v.iter_mut())
        {
            if p.shape() != g.shape() || m.shape() != g.shape() {
                return Err(NetsError::Dimension {
                    what: "gradient shape",
                    expected: p.len(),
                    got: g.len(),
                });
            }
            for (((pi, gi), mi), vi) in p
                .data_mut()
                .iter_mut()
                .zip(g.data())
                .zip(m.data_mut().iter_mut())
                .zip(v.data_mut().iter_mut())
            {
                *mi = self.beta1 * *mi + (S::one() - self.beta1) * *gi;
                *vi = self.beta2 * *vi + (S::one() - self.beta2) * *gi * *gi;
                let mhat = *mi / c1;
                let vhat = *vi / c2;
                *pi -= self.lr * mhat / (vhat.sqrt() + self.eps);
            }
        }
        Ok(())
    }
}

/// Rescales `grads` in place so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm<S: Scalar>(grads: &mut [Tensor<S>], max_norm: S) -> S {
    let norm = grads
        .iter()
        .flat_map(|g| g.data().iter())
        .map(|v| *v * *v)
        .sum::<S>()
        .sqrt();
    if norm > max_norm && norm > S::zero() {
        let k = max_norm / norm;
        for g in grads.iter_mut() {
            for v in g.data_mut() {
                *v *= k;
            }
        }
    }
    norm
}
