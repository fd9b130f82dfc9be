//! Tape-based reverse-mode automatic differentiation over dense tensors.
//!
//! Graphs are append-only: every op pushes one node, so node order is a
//! topological order and the backward pass is a single reverse sweep. The
//! whole crate is generic over the scalar type through [`Element`], which
//! is how the gradient checker runs the exact same model code in f64 while
//! training runs in f32.

pub mod attention;
pub mod checkpoint;
mod element;
mod error;
pub mod gradcheck;
mod graph;
mod kernels;
mod params;
mod tensor;

pub use attention::{multi_head_attention, AttentionOutput, AttentionWeights};
pub use element::{Element, Precision};
pub use error::{AutodiffError, Result};
pub use gradcheck::{gradient_check, GradCheckReport, GradCheckSettings};
pub use graph::{ElementwiseKind, Graph, NodeId, LAYER_NORM_EPS};
pub use params::{BoundParams, ParamId, ParamStore};
pub use tensor::{numel, Tensor};
