use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::element::Element;
use crate::error::{AutodiffError, Result};
use crate::graph::{Graph, NodeId};
use crate::tensor::{numel, Tensor};

/// Handle to a parameter in a [`ParamStore`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamId(pub(crate) usize);

struct Param<T> {
    name: String,
    tensor: Tensor<T>,
}

/// Named, ordered collection of trainable tensors. Iteration order is
/// registration order everywhere (binding, checkpointing, optimizer
/// updates), which keeps whole runs reproducible.
pub struct ParamStore<T: Element> {
    params: Vec<Param<T>>,
    rng: ChaCha8Rng,
}

/// Per-graph mapping from parameter ids to their leaf nodes.
pub struct BoundParams {
    nodes: Vec<NodeId>,
}

impl BoundParams {
    pub fn node(&self, id: ParamId) -> NodeId {
        self.nodes[id.0]
    }
}

impl<T: Element> ParamStore<T> {
    pub fn new(seed: u64) -> Self {
        ParamStore {
            params: Vec::new(),
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    fn register(&mut self, name: &str, tensor: Tensor<T>) -> Result<ParamId> {
        if self.params.iter().any(|p| p.name == name) {
            return Err(AutodiffError::Usage(format!(
                "parameter {name:?} registered twice"
            )));
        }
        self.params.push(Param {
            name: name.to_string(),
            tensor,
        });
        Ok(ParamId(self.params.len() - 1))
    }

    /// Uniform init on ±sqrt(6 / (fan_in + fan_out)), sampled in f64 then
    /// cast, so f32 and f64 stores see the same draw sequence.
    pub fn glorot(
        &mut self,
        name: &str,
        shape: Vec<usize>,
        fan_in: usize,
        fan_out: usize,
    ) -> Result<ParamId> {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        let n = numel(&shape);
        let mut data = Vec::with_capacity(n);
        for _ in 0..n {
            data.push(T::of_f64(self.rng.gen_range(-bound..bound)));
        }
        let t = Tensor::from_vec(data, shape)?.with_grad();
        self.register(name, t)
    }

    /// Matrix init where fan counts are the two dimensions.
    pub fn glorot_matrix(&mut self, name: &str, rows: usize, cols: usize) -> Result<ParamId> {
        self.glorot(name, vec![rows, cols], rows, cols)
    }

    pub fn zeros(&mut self, name: &str, shape: Vec<usize>) -> Result<ParamId> {
        let t = Tensor::zeros(shape).with_grad();
        self.register(name, t)
    }

    pub fn ones(&mut self, name: &str, shape: Vec<usize>) -> Result<ParamId> {
        let n = numel(&shape);
        let t = Tensor::from_vec(vec![T::one(); n], shape)?.with_grad();
        self.register(name, t)
    }

    pub fn from_tensor(&mut self, name: &str, tensor: Tensor<T>) -> Result<ParamId> {
        self.register(name, tensor.with_grad())
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.params[id.0].name
    }

    pub fn tensor(&self, id: ParamId) -> &Tensor<T> {
        &self.params[id.0].tensor
    }

    pub fn tensor_mut(&mut self, id: ParamId) -> &mut Tensor<T> {
        &mut self.params[id.0].tensor
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.params.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor<T>)> {
        self.params
            .iter()
            .enumerate()
            .map(|(i, p)| (ParamId(i), p.name.as_str(), &p.tensor))
    }

    pub fn total_values(&self) -> usize {
        self.params.iter().map(|p| p.tensor.numel()).sum()
    }

    /// Insert every parameter into `graph` as a differentiable leaf.
    pub fn bind(&self, graph: &mut Graph<T>) -> BoundParams {
        let nodes = self
            .params
            .iter()
            .map(|p| graph.leaf(p.tensor.clone()))
            .collect();
        BoundParams { nodes }
    }

    /// Bind with one value nudged, for finite-difference probes. The store
    /// itself is untouched.
    pub fn bind_perturbed(
        &self,
        graph: &mut Graph<T>,
        target: ParamId,
        index: usize,
        delta: T,
    ) -> BoundParams {
        let nodes = self
            .params
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let mut t = p.tensor.clone();
                if i == target.0 {
                    t.data_mut()[index] = t.data_mut()[index] + delta;
                }
                graph.leaf(t)
            })
            .collect();
        BoundParams { nodes }
    }

    /// Pull the gradient for `id` out of a graph after backward.
    pub fn grad_of<'g>(
        &self,
        graph: &'g Graph<T>,
        bound: &BoundParams,
        id: ParamId,
    ) -> Option<&'g [T]> {
        graph.grad(bound.node(id))
    }
}
