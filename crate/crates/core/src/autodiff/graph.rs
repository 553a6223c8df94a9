use std::collections::HashMap;

use crate::autodiff::{AutodiffError, Tensor};
use crate::scalar::Scalar;

/// Index of a node inside a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(usize);

impl NodeId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LeafKind {
    /// Trainable parameter.
    Param,
    /// Data input. Input gradients (gradient penalties) are taken w.r.t. these.
    Input,
    Constant,
}

/// Primitive operations recorded on the tape.
///
/// Binary elementwise ops require equal shapes, except `Add`/`Sub` which also
/// accept a `[rows, cols] (+|-) [cols]` bias broadcast. Concatenation and
/// slicing act on the last axis.
#[derive(Clone, Debug)]
pub enum Op<S> {
    Leaf(LeafKind),
    Add(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Div(NodeId, NodeId),
    /// `scale * x + shift`
    Affine {
        input: NodeId,
        scale: S,
        shift: S,
    },
    MatMul(NodeId, NodeId),
    Transpose(NodeId),
    Relu(NodeId),
    Tanh(NodeId),
    Sigmoid(NodeId),
    Exp(NodeId),
    Log(NodeId),
    Square(NodeId),
    Sqrt(NodeId),
    Clamp {
        input: NodeId,
        lo: S,
        hi: S,
    },
    Minimum(NodeId, NodeId),
    /// Sum of all entries, rank-0 result.
    Sum(NodeId),
    /// `[rows, cols] -> [cols]`
    SumRows(NodeId),
    /// One-element tensor repeated to `shape`.
    Broadcast {
        input: NodeId,
        shape: Vec<usize>,
    },
    /// `[cols] -> [rows, cols]`
    BroadcastRows {
        input: NodeId,
        rows: usize,
    },
    Concat(Vec<NodeId>),
    Slice {
        input: NodeId,
        start: usize,
        len: usize,
    },
    // Masks are piecewise constant: they carry no gradient.
    /// 1 where `x > 0`. ReLU's derivative, so the subgradient at 0 is 0.
    StepMask(NodeId),
    /// 1 where `lo < x < hi`.
    RangeMask {
        input: NodeId,
        lo: S,
        hi: S,
    },
    /// 1 where `a <= b`.
    LessEqMask(NodeId, NodeId),
}

impl<S> Op<S> {
    pub fn name(&self) -> &'static str {
        match self {
            Op::Leaf(_) => "leaf",
            Op::Add(..) => "add",
            Op::Sub(..) => "sub",
            Op::Mul(..) => "mul",
            Op::Div(..) => "div",
            Op::Affine { .. } => "affine",
            Op::MatMul(..) => "matmul",
            Op::Transpose(_) => "transpose",
            Op::Relu(_) => "relu",
            Op::Tanh(_) => "tanh",
            Op::Sigmoid(_) => "sigmoid",
            Op::Exp(_) => "exp",
            Op::Log(_) => "log",
            Op::Square(_) => "square",
            Op::Sqrt(_) => "sqrt",
            Op::Clamp { .. } => "clamp",
            Op::Minimum(..) => "minimum",
            Op::Sum(_) => "sum",
            Op::SumRows(_) => "sum_rows",
            Op::Broadcast { .. } => "broadcast",
            Op::BroadcastRows { .. } => "broadcast_rows",
            Op::Concat(_) => "concat",
            Op::Slice { .. } => "slice",
            Op::StepMask(_) => "step_mask",
            Op::RangeMask { .. } => "range_mask",
            Op::LessEqMask(..) => "less_eq_mask",
        }
    }

    pub fn inputs(&self) -> Vec<NodeId> {
        match self {
            Op::Leaf(_) => Vec::new(),
            Op::Add(a, b)
            | Op::Sub(a, b)
            | Op::Mul(a, b)
            | Op::Div(a, b)
            | Op::MatMul(a, b)
            | Op::Minimum(a, b)
            | Op::LessEqMask(a, b) => vec![*a, *b],
            Op::Affine { input, .. }
            | Op::Clamp { input, .. }
            | Op::Broadcast { input, .. }
            | Op::BroadcastRows { input, .. }
            | Op::Slice { input, .. }
            | Op::RangeMask { input, .. } => vec![*input],
            Op::Transpose(a)
            | Op::Relu(a)
            | Op::Tanh(a)
            | Op::Sigmoid(a)
            | Op::Exp(a)
            | Op::Log(a)
            | Op::Square(a)
            | Op::Sqrt(a)
            | Op::Sum(a)
            | Op::SumRows(a)
            | Op::StepMask(a) => vec![*a],
            Op::Concat(parts) => parts.clone(),
        }
    }

    fn is_mask(&self) -> bool {
        matches!(
            self,
            Op::StepMask(_) | Op::RangeMask { .. } | Op::LessEqMask(..)
        )
    }
}

/// Tape of primitive operations, evaluated eagerly as nodes are appended.
///
/// Nodes are stored in topological order by construction. `gradient` appends
/// the backward pass as ordinary nodes, so gradients can themselves be
/// differentiated (double backprop). The graph can be replayed on new leaf
/// values with [`Graph::forward`].
#[derive(Clone, Debug, Default)]
pub struct Graph<S> {
    ops: Vec<Op<S>>,
    values: Vec<Tensor<S>>,
}

impl<S: Scalar> Graph<S> {
    pub fn new() -> Self {
        Self {
            ops: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn op(&self, id: NodeId) -> &Op<S> {
        &self.ops[id.0]
    }

    pub fn value(&self, id: NodeId) -> &Tensor<S> {
        &self.values[id.0]
    }

    /// Value of a one-element node.
    pub fn scalar(&self, id: NodeId) -> Result<S, AutodiffError> {
        self.values[id.0].item()
    }

    pub fn leaf_kind(&self, id: NodeId) -> Option<LeafKind> {
        match self.ops.get(id.0) {
            Some(Op::Leaf(kind)) => Some(*kind),
            _ => None,
        }
    }

    fn push_leaf(&mut self, kind: LeafKind, value: Tensor<S>) -> Result<NodeId, AutodiffError> {
        if !value.is_finite() {
            return Err(AutodiffError::NonFinite { op: "leaf" });
        }
        self.ops.push(Op::Leaf(kind));
        self.values.push(value);
        Ok(NodeId(self.ops.len() - 1))
    }

    pub fn param(&mut self, value: Tensor<S>) -> Result<NodeId, AutodiffError> {
        self.push_leaf(LeafKind::Param, value)
    }

    pub fn input(&mut self, value: Tensor<S>) -> Result<NodeId, AutodiffError> {
        self.push_leaf(LeafKind::Input, value)
    }

    pub fn constant(&mut self, value: Tensor<S>) -> Result<NodeId, AutodiffError> {
        self.push_leaf(LeafKind::Constant, value)
    }

    fn check(&self, id: NodeId) -> Result<(), AutodiffError> {
        if id.0 < self.ops.len() {
            Ok(())
        } else {
            Err(AutodiffError::UnknownNode(id.0))
        }
    }

    /// Appends an operation node and evaluates it immediately.
    pub fn push(&mut self, op: Op<S>) -> Result<NodeId, AutodiffError> {
        if let Op::Leaf(_) = op {
            return Err(AutodiffError::LeafWithoutValue);
        }
        for input in op.inputs() {
            self.check(input)?;
        }
        let value = evaluate(&op, |id| &self.values[id.0])?;
        self.ops.push(op);
        self.values.push(value);
        Ok(NodeId(self.ops.len() - 1))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.push(Op::Add(a, b))
    }
    pub fn sub(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.push(Op::Sub(a, b))
    }
    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.push(Op::Mul(a, b))
    }
    pub fn div(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.push(Op::Div(a, b))
    }
    pub fn affine(&mut self, a: NodeId, scale: S, shift: S) -> Result<NodeId, AutodiffError> {
        self.push(Op::Affine {
            input: a,
            scale,
            shift,
        })
    }
    pub fn scale(&mut self, a: NodeId, factor: S) -> Result<NodeId, AutodiffError> {
        self.affine(a, factor, S::zero())
    }
    pub fn neg(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        self.affine(a, -S::one(), S::zero())
    }
    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.push(Op::MatMul(a, b))
    }
    pub fn transpose(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        self.push(Op::Transpose(a))
    }
    pub fn relu(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        self.push(Op::Relu(a))
    }
    pub fn tanh(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        self.push(Op::Tanh(a))
    }
    pub fn sigmoid(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        self.push(Op::Sigmoid(a))
    }
    pub fn exp(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        self.push(Op::Exp(a))
    }
    pub fn log(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        self.push(Op::Log(a))
    }
    pub fn square(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        self.push(Op::Square(a))
    }
    pub fn sqrt(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        self.push(Op::Sqrt(a))
    }
    pub fn clamp(&mut self, a: NodeId, lo: S, hi: S) -> Result<NodeId, AutodiffError> {
        self.push(Op::Clamp { input: a, lo, hi })
    }
    pub fn minimum(&mut self, a: NodeId, b: NodeId) -> Result<NodeId, AutodiffError> {
        self.push(Op::Minimum(a, b))
    }
    pub fn sum(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        self.push(Op::Sum(a))
    }
    pub fn sum_rows(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        self.push(Op::SumRows(a))
    }
    pub fn broadcast(&mut self, a: NodeId, shape: Vec<usize>) -> Result<NodeId, AutodiffError> {
        self.push(Op::Broadcast { input: a, shape })
    }
    pub fn broadcast_rows(&mut self, a: NodeId, rows: usize) -> Result<NodeId, AutodiffError> {
        self.push(Op::BroadcastRows { input: a, rows })
    }
    pub fn concat(&mut self, parts: Vec<NodeId>) -> Result<NodeId, AutodiffError> {
        self.push(Op::Concat(parts))
    }
    pub fn slice(&mut self, a: NodeId, start: usize, len: usize) -> Result<NodeId, AutodiffError> {
        self.push(Op::Slice {
            input: a,
            start,
            len,
        })
    }

    /// Mean over all entries.
    pub fn mean(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let n = self.values[a.0].len();
        let total = self.sum(a)?;
        self.scale(total, S::one() / S::lit(n as f64))
    }

    /// Per-row sum of a `[rows, cols]` matrix as a `[rows, 1]` column.
    pub fn row_sums(&mut self, a: NodeId) -> Result<NodeId, AutodiffError> {
        let cols = self.values[a.0].cols();
        let ones = self.constant(Tensor::ones(vec![cols, 1]))?;
        self.matmul(a, ones)
    }

    /// Re-evaluates every node, substituting `bindings` for leaf values.
    /// Leaves without a binding keep the value they were created with.
    pub fn forward(
        &self,
        bindings: &HashMap<NodeId, Tensor<S>>,
    ) -> Result<Vec<Tensor<S>>, AutodiffError> {
        let mut values: Vec<Tensor<S>> = Vec::with_capacity(self.ops.len());
        for (i, op) in self.ops.iter().enumerate() {
            let value = match op {
                Op::Leaf(_) => match bindings.get(&NodeId(i)) {
                    Some(bound) => {
                        if bound.shape() != self.values[i].shape() {
                            return Err(AutodiffError::ShapeMismatch {
                                op: "bind",
                                lhs: self.values[i].shape().to_vec(),
                                rhs: bound.shape().to_vec(),
                            });
                        }
                        if !bound.is_finite() {
                            return Err(AutodiffError::NonFinite { op: "leaf" });
                        }
                        bound.clone()
                    }
                    None => self.values[i].clone(),
                },
                _ => evaluate(op, |id| &values[id.0])?,
            };
            values.push(value);
        }
        Ok(values)
    }

    /// Appends the reverse-mode pass for `output` and returns, for each node in
    /// `wrt`, a node holding `d output / d node`.
    ///
    /// The returned nodes are regular graph nodes built from differentiable
    /// primitives, so a second call to `gradient` differentiates through them.
    pub fn gradient(
        &mut self,
        output: NodeId,
        wrt: &[NodeId],
    ) -> Result<Vec<NodeId>, AutodiffError> {
        self.check(output)?;
        for &w in wrt {
            self.check(w)?;
        }
        let out_value = &self.values[output.0];
        if out_value.len() != 1 {
            return Err(AutodiffError::NotScalar {
                shape: out_value.shape().to_vec(),
            });
        }

        let n = output.0 + 1;
        let mut relevant = vec![false; n];
        for &w in wrt {
            if w.0 < n {
                relevant[w.0] = true;
            }
        }
        for i in 0..n {
            if relevant[i] || self.ops[i].is_mask() {
                continue;
            }
            relevant[i] = self.ops[i].inputs().iter().any(|inp| relevant[inp.0]);
        }

        let mut adjoints: Vec<Option<NodeId>> = vec![None; n];
        let seed_shape = self.values[output.0].shape().to_vec();
        adjoints[output.0] = Some(self.constant(Tensor::ones(seed_shape))?);

        for i in (0..n).rev() {
            let Some(adj) = adjoints[i] else { continue };
            if !relevant[i] {
                continue;
            }
            let contributions = self.backward_rule(NodeId(i), adj, &relevant)?;
            for (input, grad) in contributions {
                adjoints[input.0] = Some(match adjoints[input.0] {
                    None => grad,
                    Some(existing) => self.add(existing, grad)?,
                });
            }
        }

        wrt.iter()
            .map(|&w| match adjoints.get(w.0).copied().flatten() {
                Some(g) => Ok(g),
                None => {
                    let shape = self.values[w.0].shape().to_vec();
                    self.constant(Tensor::zeros(shape))
                }
            })
            .collect()
    }

    /// Appends `||d output / d input||^2` as a new scalar node, differentiable
    /// w.r.t. the parameters `output` depends on.
    pub fn grad_norm_sq(&mut self, output: NodeId, input: NodeId) -> Result<NodeId, AutodiffError> {
        self.check(input)?;
        if self.leaf_kind(input) != Some(LeafKind::Input) {
            return Err(AutodiffError::NotInputLeaf(input.0));
        }
        let grad = self.gradient(output, &[input])?[0];
        let sq = self.square(grad)?;
        self.sum(sq)
    }

    fn backward_rule(
        &mut self,
        node: NodeId,
        adj: NodeId,
        relevant: &[bool],
    ) -> Result<Vec<(NodeId, NodeId)>, AutodiffError> {
        let op = self.ops[node.0].clone();
        let wants = |id: NodeId| relevant[id.0];
        let mut out = Vec::with_capacity(2);
        match op {
            Op::Leaf(_)
            | Op::StepMask(_)
            | Op::RangeMask { .. }
            | Op::LessEqMask(..) => {}
            Op::Add(a, b) | Op::Sub(a, b) => {
                let is_sub = matches!(self.ops[node.0], Op::Sub(..));
                if wants(a) {
                    out.push((a, adj));
                }
                if wants(b) {
                    let broadcast = self.values[b.0].shape() != self.values[node.0].shape();
                    let g = if broadcast { self.sum_rows(adj)? } else { adj };
                    let g = if is_sub { self.neg(g)? } else { g };
                    out.push((b, g));
                }
            }
            Op::Mul(a, b) => {
                if wants(a) {
                    out.push((a, self.mul(adj, b)?));
                }
                if wants(b) {
                    out.push((b, self.mul(adj, a)?));
                }
            }
            Op::Div(a, b) => {
                if wants(a) {
                    out.push((a, self.div(adj, b)?));
                }
                if wants(b) {
                    // -adj * a / b^2 == -(adj * node) / b
                    let t = self.mul(adj, node)?;
                    let t = self.div(t, b)?;
                    out.push((b, self.neg(t)?));
                }
            }
            Op::Affine { input, scale, .. } => {
                if wants(input) {
                    out.push((input, self.scale(adj, scale)?));
                }
            }
            Op::MatMul(a, b) => {
                if wants(a) {
                    let bt = self.transpose(b)?;
                    out.push((a, self.matmul(adj, bt)?));
                }
                if wants(b) {
                    let at = self.transpose(a)?;
                    out.push((b, self.matmul(at, adj)?));
                }
            }
            Op::Transpose(a) => {
                out.push((a, self.transpose(adj)?));
            }
            Op::Relu(a) => {
                let mask = self.push(Op::StepMask(a))?;
                out.push((a, self.mul(adj, mask)?));
            }
            Op::Tanh(a) => {
                let sq = self.square(node)?;
                let d = self.affine(sq, -S::one(), S::one())?;
                out.push((a, self.mul(adj, d)?));
            }
            Op::Sigmoid(a) => {
                let one_minus = self.affine(node, -S::one(), S::one())?;
                let d = self.mul(node, one_minus)?;
                out.push((a, self.mul(adj, d)?));
            }
            Op::Exp(a) => {
                out.push((a, self.mul(adj, node)?));
            }
            Op::Log(a) => {
                out.push((a, self.div(adj, a)?));
            }
            Op::Square(a) => {
                let two_a = self.scale(a, S::lit(2.0))?;
                out.push((a, self.mul(adj, two_a)?));
            }
            Op::Sqrt(a) => {
                let half = self.scale(adj, S::lit(0.5))?;
                out.push((a, self.div(half, node)?));
            }
            Op::Clamp { input, lo, hi } => {
                let mask = self.push(Op::RangeMask { input, lo, hi })?;
                out.push((input, self.mul(adj, mask)?));
            }
            Op::Minimum(a, b) => {
                let take_a = self.push(Op::LessEqMask(a, b))?;
                if wants(a) {
                    out.push((a, self.mul(adj, take_a)?));
                }
                if wants(b) {
                    let take_b = self.affine(take_a, -S::one(), S::one())?;
                    out.push((b, self.mul(adj, take_b)?));
                }
            }
            Op::Sum(a) => {
                let shape = self.values[a.0].shape().to_vec();
                out.push((a, self.broadcast(adj, shape)?));
            }
            Op::SumRows(a) => {
                let rows = self.values[a.0].rows();
                out.push((a, self.broadcast_rows(adj, rows)?));
            }
            Op::Broadcast { input, .. } => {
                let total = self.sum(adj)?;
                let shape = self.values[input.0].shape().to_vec();
                let g = if shape.is_empty() {
                    total
                } else {
                    self.broadcast(total, shape)?
                };
                out.push((input, g));
            }
            Op::BroadcastRows { input, .. } => {
                out.push((input, self.sum_rows(adj)?));
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for part in parts {
                    let width = self.values[part.0].cols();
                    if wants(part) {
                        out.push((part, self.slice(adj, offset, width)?));
                    }
                    offset += width;
                }
            }
            Op::Slice { input, start, len } => {
                let shape = self.values[input.0].shape().to_vec();
                let total = *shape.last().unwrap_or(&1);
                let mut pieces = Vec::with_capacity(3);
                let pad = |g: &mut Self, width: usize| -> Result<NodeId, AutodiffError> {
                    let mut s = shape.clone();
                    *s.last_mut().expect("slice of rank >= 1") = width;
                    g.constant(Tensor::zeros(s))
                };
                if start > 0 {
                    pieces.push(pad(self, start)?);
                }
                pieces.push(adj);
                if start + len < total {
                    pieces.push(pad(self, total - start - len)?);
                }
                let g = if pieces.len() == 1 {
                    adj
                } else {
                    self.concat(pieces)?
                };
                out.push((input, g));
            }
        }
        Ok(out)
    }
}

fn mismatch<S: Scalar>(op: &'static str, a: &Tensor<S>, b: &Tensor<S>) -> AutodiffError {
    AutodiffError::ShapeMismatch {
        op,
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    }
}

/// `[rows, cols] (op) [cols]` row-wise broadcast, used for bias terms.
fn broadcast_binary<S: Scalar>(
    name: &'static str,
    a: &Tensor<S>,
    b: &Tensor<S>,
    f: impl Fn(S, S) -> S,
) -> Result<Tensor<S>, AutodiffError> {
    if a.shape() == b.shape() {
        return a.zip_map(b, name, f);
    }
    if a.rank() == 2 && b.rank() == 1 && a.cols() == b.len() {
        let cols = a.cols();
        let data = a
            .data()
            .iter()
            .enumerate()
            .map(|(i, &x)| f(x, b.data()[i % cols]))
            .collect();
        return Tensor::new(a.shape().to_vec(), data);
    }
    Err(mismatch(name, a, b))
}

fn evaluate<'a, S: Scalar>(
    op: &Op<S>,
    get: impl Fn(NodeId) -> &'a Tensor<S>,
) -> Result<Tensor<S>, AutodiffError> {
    let value = match op {
        Op::Leaf(_) => return Err(AutodiffError::LeafWithoutValue),
        Op::Add(a, b) => broadcast_binary("add", get(*a), get(*b), |x, y| x + y)?,
        Op::Sub(a, b) => broadcast_binary("sub", get(*a), get(*b), |x, y| x - y)?,
        Op::Mul(a, b) => get(*a).zip_map(get(*b), "mul", |x, y| x * y)?,
        Op::Div(a, b) => get(*a).zip_map(get(*b), "div", |x, y| x / y)?,
        Op::Affine {
            input,
            scale,
            shift,
        } => get(*input).map(|x| *scale * x + *shift),
        Op::MatMul(a, b) => get(*a).matmul(get(*b))?,
        Op::Transpose(a) => get(*a).transpose()?,
        Op::Relu(a) => get(*a).map(|x| if x > S::zero() { x } else { S::zero() }),
        Op::Tanh(a) => get(*a).map(|x| x.tanh()),
        Op::Sigmoid(a) => get(*a).map(sigmoid),
        Op::Exp(a) => get(*a).map(|x| x.exp()),
        Op::Log(a) => get(*a).map(|x| x.ln()),
        Op::Square(a) => get(*a).map(|x| x * x),
        Op::Sqrt(a) => get(*a).map(|x| x.sqrt()),
        Op::Clamp { input, lo, hi } => get(*input).map(|x| x.max(*lo).min(*hi)),
        Op::Minimum(a, b) => get(*a).zip_map(get(*b), "minimum", |x, y| x.min(y))?,
        Op::Sum(a) => Tensor::scalar(get(*a).sum()),
        Op::SumRows(a) => {
            let t = get(*a);
            if t.rank() != 2 {
                return Err(mismatch("sum_rows", t, t));
            }
            let cols = t.cols();
            let mut out = vec![S::zero(); cols];
            for r in 0..t.rows() {
                for (o, &v) in out.iter_mut().zip(t.row(r)) {
                    *o += v;
                }
            }
            Tensor::vector(out)
        }
        Op::Broadcast { input, shape } => {
            let t = get(*input);
            let v = t.item()?;
            Tensor::full(shape.clone(), v)
        }
        Op::BroadcastRows { input, rows } => {
            let t = get(*input);
            if t.rank() != 1 {
                return Err(mismatch("broadcast_rows", t, t));
            }
            let mut data = Vec::with_capacity(rows * t.len());
            for _ in 0..*rows {
                data.extend_from_slice(t.data());
            }
            Tensor::new(vec![*rows, t.len()], data)?
        }
        Op::Concat(parts) => {
            let first = get(*parts.first().ok_or(AutodiffError::EmptyConcat)?);
            let rank = first.rank();
            let rows = first.rows();
            let mut width = 0;
            for p in parts {
                let t = get(*p);
                if t.rank() != rank || rank == 0 || t.rows() != rows {
                    return Err(mismatch("concat", first, t));
                }
                width += t.cols();
            }
            let mut data = Vec::with_capacity(rows * width);
            for r in 0..rows {
                for p in parts {
                    data.extend_from_slice(get(*p).row(r));
                }
            }
            let shape = if rank == 1 {
                vec![width]
            } else {
                vec![rows, width]
            };
            Tensor::new(shape, data)?
        }
        Op::Slice { input, start, len } => {
            let t = get(*input);
            if t.rank() == 0 || start + len > t.cols() {
                return Err(AutodiffError::SliceOutOfRange {
                    start: *start,
                    len: *len,
                    width: t.cols(),
                });
            }
            let mut data = Vec::with_capacity(t.rows() * len);
            for r in 0..t.rows() {
                data.extend_from_slice(&t.row(r)[*start..start + len]);
            }
            let mut shape = t.shape().to_vec();
            *shape.last_mut().expect("rank >= 1") = *len;
            Tensor::new(shape, data)?
        }
        Op::StepMask(a) => get(*a).map(|x| if x > S::zero() { S::one() } else { S::zero() }),
        Op::RangeMask { input, lo, hi } => get(*input).map(|x| {
            if x > *lo && x < *hi {
                S::one()
            } else {
                S::zero()
            }
        }),
        Op::LessEqMask(a, b) => get(*a).zip_map(get(*b), "less_eq_mask", |x, y| {
            if x <= y {
                S::one()
            } else {
                S::zero()
            }
        })?,
    };
    if !value.is_finite() {
        return Err(AutodiffError::NonFinite { op: op.name() });
    }
    Ok(value)
}

/// Numerically stable logistic function.
pub fn sigmoid<S: Scalar>(x: S) -> S {
    if x >= S::zero() {
        S::one() / (S::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (S::one() + e)
    }
}
