//! Reverse-mode automatic differentiation over dense tensors.
//!
//! The backward pass is recorded on the same tape as the forward pass, which
//! is what makes gradient penalties trainable: `||d D / d x||^2` is an ordinary
//! node and can be differentiated again w.r.t. the discriminator parameters.

mod graph;
mod tensor;

pub use graph::{sigmoid, Graph, LeafKind, NodeId, Op};
pub use tensor::Tensor;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AutodiffError {
    #[error("shape mismatch in {op}: {lhs:?} vs {rhs:?}")]
    ShapeMismatch {
        op: &'static str,
        lhs: Vec<usize>,
        rhs: Vec<usize>,
    },
    #[error("data length {len} does not match shape {shape:?}")]
    DataLength { shape: Vec<usize>, len: usize },
    #[error("non-finite value produced by {op}")]
    NonFinite { op: &'static str },
    #[error("expected a one-element tensor, got shape {shape:?}")]
    NotScalar { shape: Vec<usize> },
    #[error("node {0} is not a data input leaf")]
    NotInputLeaf(usize),
    #[error("unknown node {0}")]
    UnknownNode(usize),
    #[error("leaf nodes must be created with a value")]
    LeafWithoutValue,
    #[error("concat of zero tensors")]
    EmptyConcat,
    #[error("slice {start}..{start}+{len} out of range for width {width}")]
    SliceOutOfRange {
        start: usize,
        len: usize,
        width: usize,
    },
}
