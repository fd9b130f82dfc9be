use crate::element::Element;
use crate::error::{AutodiffError, Result};
use crate::kernels;
use crate::tensor::{numel, Tensor};

/// Handle to a node in a [`Graph`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct NodeId(pub(crate) usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementwiseKind {
    Add,
    Mul,
    Relu,
    Tanh,
}

/// Op record: kind, input ids, and whatever forward state the backward
/// rule needs (argmax indices, saved statistics, softmax outputs).
#[derive(Debug)]
enum Op<T> {
    Leaf,
    MatMul {
        a: usize,
        b: usize,
    },
    Add {
        a: usize,
        b: usize,
    },
    AddBiasRow {
        a: usize,
        bias: usize,
    },
    Mul {
        a: usize,
        b: usize,
    },
    Relu {
        a: usize,
    },
    Tanh {
        a: usize,
    },
    Scale {
        a: usize,
        c: T,
    },
    Transpose {
        a: usize,
    },
    Reshape {
        a: usize,
    },
    SliceCols {
        a: usize,
        start: usize,
        len: usize,
    },
    SliceRows {
        a: usize,
        start: usize,
        len: usize,
    },
    ConcatCols {
        parts: Vec<usize>,
    },
    MeanRows {
        a: usize,
    },
    SumAll {
        a: usize,
    },
    SoftmaxRows {
        a: usize,
    },
    Conv2d {
        input: usize,
        kernels: usize,
        bias: usize,
    },
    MaxPool2 {
        input: usize,
        argmax: Vec<usize>,
    },
    LayerNorm {
        x: usize,
        gain: usize,
        shift: usize,
        /// (mean, 1/sqrt(var+eps)) per row.
        stats: Vec<(T, T)>,
    },
    SoftmaxCrossEntropy {
        logits: usize,
        labels: Vec<usize>,
        probs: Vec<T>,
    },
    GatherRows {
        table: usize,
        ids: Vec<usize>,
    },
}

struct Node<T> {
    op: Op<T>,
    tensor: Tensor<T>,
}

/// Append-only compute graph recording forward ops for reverse-mode
/// differentiation. Node ids are created in topological order, so one
/// reverse sweep accumulates every gradient.
pub struct Graph<T: Element> {
    nodes: Vec<Node<T>>,
}

pub const LAYER_NORM_EPS: f64 = 1e-5;

impl<T: Element> Default for Graph<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Element> Graph<T> {
    pub fn new() -> Self {
        Graph { nodes: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, id: NodeId) -> &Tensor<T> {
        &self.nodes[id.0].tensor
    }

    pub fn shape(&self, id: NodeId) -> &[usize] {
        self.nodes[id.0].tensor.shape()
    }

    pub fn grad(&self, id: NodeId) -> Option<&[T]> {
        self.nodes[id.0].tensor.grad.as_deref()
    }

    /// Scalar value of a 1-element node.
    pub fn scalar_value(&self, id: NodeId) -> T {
        self.nodes[id.0].tensor.data()[0]
    }

    pub fn leaf(&mut self, tensor: Tensor<T>) -> NodeId {
        self.push(Op::Leaf, tensor)
    }

    /// Leaf that does not participate in differentiation.
    pub fn constant(&mut self, data: Vec<T>, shape: Vec<usize>) -> Result<NodeId> {
        Ok(self.leaf(Tensor::from_vec(data, shape)?))
    }

    fn push(&mut self, op: Op<T>, mut tensor: Tensor<T>) -> NodeId {
        if !matches!(op, Op::Leaf) {
            tensor.requires_grad = self.inputs_require_grad(&op);
        }
        self.nodes.push(Node { op, tensor });
        NodeId(self.nodes.len() - 1)
    }

    fn inputs_require_grad(&self, op: &Op<T>) -> bool {
        let req = |i: &usize| self.nodes[*i].tensor.requires_grad;
        match op {
            Op::Leaf => false,
            Op::MatMul { a, b } | Op::Add { a, b } | Op::Mul { a, b } => req(a) || req(b),
            Op::AddBiasRow { a, bias } => req(a) || req(bias),
            Op::Relu { a }
            | Op::Tanh { a }
            | Op::Scale { a, .. }
            | Op::Transpose { a }
            | Op::Reshape { a }
            | Op::SliceCols { a, .. }
            | Op::SliceRows { a, .. }
            | Op::MeanRows { a }
            | Op::SumAll { a }
            | Op::SoftmaxRows { a, .. } => req(a),
            Op::ConcatCols { parts } => parts.iter().any(req),
            Op::Conv2d {
                input,
                kernels,
                bias,
            } => req(input) || req(kernels) || req(bias),
            Op::MaxPool2 { input, .. } => req(input),
            Op::LayerNorm { x, gain, shift, .. } => req(x) || req(gain) || req(shift),
            Op::SoftmaxCrossEntropy { logits, .. } => req(logits),
            Op::GatherRows { table, .. } => req(table),
        }
    }

    fn check_2d(&self, id: NodeId, op: &'static str) -> Result<(usize, usize)> {
        let s = self.shape(id);
        if s.len() != 2 {
            return Err(AutodiffError::ShapeMismatch {
                op,
                lhs: s.to_vec(),
                rhs: vec![],
            });
        }
        Ok((s[0], s[1]))
    }

    // ── forward ops ─────────────────────────────────────────────────

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        let (m, k) = self.check_2d(a, "matmul")?;
        let (k2, n) = self.check_2d(b, "matmul")?;
        if k != k2 {
            return Err(AutodiffError::ShapeMismatch {
                op: "matmul",
                lhs: self.shape(a).to_vec(),
                rhs: self.shape(b).to_vec(),
            });
        }
        let mut out = vec![T::zero(); m * n];
        kernels::matmul(
            self.value(a).data(),
            self.value(b).data(),
            m,
            k,
            n,
            &mut out,
        );
        let t = Tensor::from_vec(out, vec![m, n])?;
        Ok(self.push(Op::MatMul { a: a.0, b: b.0 }, t))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.shape(a) != self.shape(b) {
            return Err(AutodiffError::ShapeMismatch {
                op: "add",
                lhs: self.shape(a).to_vec(),
                rhs: self.shape(b).to_vec(),
            });
        }
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| x + y)
            .collect();
        let t = Tensor::from_vec(data, self.shape(a).to_vec())?;
        Ok(self.push(Op::Add { a: a.0, b: b.0 }, t))
    }

    /// Broadcast add of a row vector: x[L×d] + bias[d].
    pub fn add_bias_row(&mut self, a: NodeId, bias: NodeId) -> Result<NodeId> {
        let (l, d) = self.check_2d(a, "add_bias_row")?;
        let bs = self.shape(bias);
        if bs != [d] {
            return Err(AutodiffError::ShapeMismatch {
                op: "add_bias_row",
                lhs: vec![l, d],
                rhs: bs.to_vec(),
            });
        }
        let b = self.value(bias).data().to_vec();
        let mut data = self.value(a).data().to_vec();
        for row in data.chunks_exact_mut(d) {
            for (x, &bv) in row.iter_mut().zip(&b) {
                *x = *x + bv;
            }
        }
        let t = Tensor::from_vec(data, vec![l, d])?;
        Ok(self.push(
            Op::AddBiasRow {
                a: a.0,
                bias: bias.0,
            },
            t,
        ))
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> Result<NodeId> {
        if self.shape(a) != self.shape(b) {
            return Err(AutodiffError::ShapeMismatch {
                op: "mul",
                lhs: self.shape(a).to_vec(),
                rhs: self.shape(b).to_vec(),
            });
        }
        let data = self
            .value(a)
            .data()
            .iter()
            .zip(self.value(b).data())
            .map(|(&x, &y)| x * y)
            .collect();
        let t = Tensor::from_vec(data, self.shape(a).to_vec())?;
        Ok(self.push(Op::Mul { a: a.0, b: b.0 }, t))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let data = self
            .value(a)
            .data()
            .iter()
            .map(|&x| if x > T::zero() { x } else { T::zero() })
            .collect();
        let t = Tensor::from_vec(data, self.shape(a).to_vec()).expect("same shape");
        self.push(Op::Relu { a: a.0 }, t)
    }

    pub fn tanh(&mut self, a: NodeId) -> NodeId {
        let data = self.value(a).data().iter().map(|&x| x.tanh()).collect();
        let t = Tensor::from_vec(data, self.shape(a).to_vec()).expect("same shape");
        self.push(Op::Tanh { a: a.0 }, t)
    }

    pub fn scale(&mut self, a: NodeId, c: T) -> NodeId {
        let data = self.value(a).data().iter().map(|&x| x * c).collect();
        let t = Tensor::from_vec(data, self.shape(a).to_vec()).expect("same shape");
        self.push(Op::Scale { a: a.0, c }, t)
    }

    /// Pointwise op dispatcher; `b` is required for the binary kinds and
    /// rejected for the unary ones.
    pub fn elementwise(
        &mut self,
        kind: ElementwiseKind,
        a: NodeId,
        b: Option<NodeId>,
    ) -> Result<NodeId> {
        match (kind, b) {
            (ElementwiseKind::Add, Some(b)) => self.add(a, b),
            (ElementwiseKind::Mul, Some(b)) => self.mul(a, b),
            (ElementwiseKind::Relu, None) => Ok(self.relu(a)),
            (ElementwiseKind::Tanh, None) => Ok(self.tanh(a)),
            (k, Some(_)) => Err(AutodiffError::Usage(format!(
                "elementwise {k:?} takes one operand"
            ))),
            (k, None) => Err(AutodiffError::Usage(format!(
                "elementwise {k:?} takes two operands"
            ))),
        }
    }

    pub fn transpose(&mut self, a: NodeId) -> Result<NodeId> {
        let (m, n) = self.check_2d(a, "transpose")?;
        let mut out = vec![T::zero(); m * n];
        kernels::transpose(self.value(a).data(), m, n, &mut out);
        let t = Tensor::from_vec(out, vec![n, m])?;
        Ok(self.push(Op::Transpose { a: a.0 }, t))
    }

    pub fn reshape(&mut self, a: NodeId, shape: Vec<usize>) -> Result<NodeId> {
        if numel(&shape) != self.value(a).numel() {
            return Err(AutodiffError::ShapeMismatch {
                op: "reshape",
                lhs: self.shape(a).to_vec(),
                rhs: shape,
            });
        }
        let t = Tensor::from_vec(self.value(a).data().to_vec(), shape)?;
        Ok(self.push(Op::Reshape { a: a.0 }, t))
    }

    pub fn slice_cols(&mut self, a: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let (m, n) = self.check_2d(a, "slice_cols")?;
        if start + len > n || len == 0 {
            return Err(AutodiffError::Usage(format!(
                "slice_cols [{start}, {}) out of bounds for {n} columns",
                start + len
            )));
        }
        let src = self.value(a).data();
        let mut out = Vec::with_capacity(m * len);
        for i in 0..m {
            out.extend_from_slice(&src[i * n + start..i * n + start + len]);
        }
        let t = Tensor::from_vec(out, vec![m, len])?;
        Ok(self.push(Op::SliceCols { a: a.0, start, len }, t))
    }

    pub fn slice_rows(&mut self, a: NodeId, start: usize, len: usize) -> Result<NodeId> {
        let (m, n) = self.check_2d(a, "slice_rows")?;
        if start + len > m || len == 0 {
            return Err(AutodiffError::Usage(format!(
                "slice_rows [{start}, {}) out of bounds for {m} rows",
                start + len
            )));
        }
        let src = self.value(a).data();
        let out = src[start * n..(start + len) * n].to_vec();
        let t = Tensor::from_vec(out, vec![len, n])?;
        Ok(self.push(Op::SliceRows { a: a.0, start, len }, t))
    }

    pub fn concat_cols(&mut self, parts: &[NodeId]) -> Result<NodeId> {
        if parts.is_empty() {
            return Err(AutodiffError::Usage("concat_cols of zero parts".into()));
        }
        let (m, _) = self.check_2d(parts[0], "concat_cols")?;
        let mut widths = Vec::with_capacity(parts.len());
        for &p in parts {
            let (mp, np) = self.check_2d(p, "concat_cols")?;
            if mp != m {
                return Err(AutodiffError::ShapeMismatch {
                    op: "concat_cols",
                    lhs: self.shape(parts[0]).to_vec(),
                    rhs: self.shape(p).to_vec(),
                });
            }
            widths.push(np);
        }
        let total: usize = widths.iter().sum();
        let mut out = Vec::with_capacity(m * total);
        for i in 0..m {
            for (&p, &w) in parts.iter().zip(&widths) {
                let src = self.value(p).data();
                out.extend_from_slice(&src[i * w..(i + 1) * w]);
            }
        }
        let t = Tensor::from_vec(out, vec![m, total])?;
        Ok(self.push(
            Op::ConcatCols {
                parts: parts.iter().map(|p| p.0).collect(),
            },
            t,
        ))
    }

    /// Mean over rows: x[L×d] → [1×d].
    pub fn mean_rows(&mut self, a: NodeId) -> Result<NodeId> {
        let (l, d) = self.check_2d(a, "mean_rows")?;
        let src = self.value(a).data();
        let inv = T::one() / T::of_f64(l as f64);
        let mut out = vec![T::zero(); d];
        for row in src.chunks_exact(d) {
            for (o, &x) in out.iter_mut().zip(row) {
                *o = *o + x;
            }
        }
        for o in out.iter_mut() {
            *o = *o * inv;
        }
        let t = Tensor::from_vec(out, vec![1, d])?;
        Ok(self.push(Op::MeanRows { a: a.0 }, t))
    }

    pub fn sum_all(&mut self, a: NodeId) -> NodeId {
        let total: T = self.value(a).data().iter().copied().sum();
        self.push(Op::SumAll { a: a.0 }, Tensor::scalar(total))
    }

    /// Row-wise softmax. With a mask, only `true` columns participate;
    /// masked columns get probability zero.
    pub fn softmax_rows(&mut self, a: NodeId, mask: Option<&[bool]>) -> Result<NodeId> {
        let (m, n) = self.check_2d(a, "softmax_rows")?;
        if let Some(mk) = mask {
            if mk.len() != n {
                return Err(AutodiffError::ShapeMismatch {
                    op: "softmax_rows",
                    lhs: vec![m, n],
                    rhs: vec![mk.len()],
                });
            }
            if !mk.iter().any(|&b| b) {
                return Err(AutodiffError::Numeric(
                    "softmax mask excludes every column".into(),
                ));
            }
        }
        let src = self.value(a).data();
        let mut out = vec![T::zero(); m * n];
        for i in 0..m {
            let row = &src[i * n..(i + 1) * n];
            let orow = &mut out[i * n..(i + 1) * n];
            softmax_row(row, mask, orow);
        }
        let t = Tensor::from_vec(out, vec![m, n])?;
        Ok(self.push(Op::SoftmaxRows { a: a.0 }, t))
    }

    /// Valid cross-correlation, stride 1: input[H×W×Cin] * kernels[K×K×Cin×Cout] + bias[Cout].
    pub fn conv2d(&mut self, input: NodeId, kernel: NodeId, bias: NodeId) -> Result<NodeId> {
        let is = self.shape(input).to_vec();
        let ks = self.shape(kernel).to_vec();
        if is.len() != 3 || ks.len() != 4 || ks[0] != ks[1] || ks[2] != is[2] {
            return Err(AutodiffError::ShapeMismatch {
                op: "conv2d",
                lhs: is,
                rhs: ks,
            });
        }
        let (h, w, cin, k, cout) = (is[0], is[1], is[2], ks[0], ks[3]);
        if h < k || w < k {
            return Err(AutodiffError::ShapeMismatch {
                op: "conv2d: kernel larger than input",
                lhs: is,
                rhs: ks,
            });
        }
        if self.shape(bias) != [cout] {
            return Err(AutodiffError::ShapeMismatch {
                op: "conv2d bias",
                lhs: self.shape(bias).to_vec(),
                rhs: vec![cout],
            });
        }
        let (oh, ow) = (h - k + 1, w - k + 1);
        let mut out = vec![T::zero(); oh * ow * cout];
        kernels::conv2d_forward(
            self.value(input).data(),
            self.value(kernel).data(),
            self.value(bias).data(),
            h,
            w,
            cin,
            k,
            cout,
            &mut out,
        );
        let t = Tensor::from_vec(out, vec![oh, ow, cout])?;
        Ok(self.push(
            Op::Conv2d {
                input: input.0,
                kernels: kernel.0,
                bias: bias.0,
            },
            t,
        ))
    }

    /// 2×2 max pooling, stride 2; odd trailing row/column dropped.
    pub fn maxpool2(&mut self, input: NodeId) -> Result<NodeId> {
        let is = self.shape(input).to_vec();
        if is.len() != 3 || is[0] < 2 || is[1] < 2 {
            return Err(AutodiffError::ShapeMismatch {
                op: "maxpool2",
                lhs: is,
                rhs: vec![2, 2],
            });
        }
        let (h, w, c) = (is[0], is[1], is[2]);
        let (oh, ow) = (h / 2, w / 2);
        let mut out = vec![T::zero(); oh * ow * c];
        let mut argmax = vec![0usize; oh * ow * c];
        kernels::maxpool2_forward(self.value(input).data(), h, w, c, &mut out, &mut argmax);
        let t = Tensor::from_vec(out, vec![oh, ow, c])?;
        Ok(self.push(
            Op::MaxPool2 {
                input: input.0,
                argmax,
            },
            t,
        ))
    }

    /// Row-wise layer normalization with learned gain and shift.
    pub fn layer_norm(&mut self, x: NodeId, gain: NodeId, shift: NodeId) -> Result<NodeId> {
        let (l, d) = self.check_2d(x, "layer_norm")?;
        if self.shape(gain) != [d] || self.shape(shift) != [d] {
            return Err(AutodiffError::ShapeMismatch {
                op: "layer_norm",
                lhs: vec![l, d],
                rhs: self.shape(gain).to_vec(),
            });
        }
        let eps = T::of_f64(LAYER_NORM_EPS);
        let inv_d = T::one() / T::of_f64(d as f64);
        let src = self.value(x).data();
        let g = self.value(gain).data().to_vec();
        let s = self.value(shift).data().to_vec();
        let mut out = vec![T::zero(); l * d];
        let mut stats = Vec::with_capacity(l);
        for i in 0..l {
            let row = &src[i * d..(i + 1) * d];
            let mean = row.iter().copied().sum::<T>() * inv_d;
            let var = row.iter().map(|&v| (v - mean) * (v - mean)).sum::<T>() * inv_d;
            let rstd = T::one() / (var + eps).sqrt();
            stats.push((mean, rstd));
            let orow = &mut out[i * d..(i + 1) * d];
            for (j, (o, &v)) in orow.iter_mut().zip(row).enumerate() {
                *o = (v - mean) * rstd * g[j] + s[j];
            }
        }
        let t = Tensor::from_vec(out, vec![l, d])?;
        Ok(self.push(
            Op::LayerNorm {
                x: x.0,
                gain: gain.0,
                shift: shift.0,
                stats,
            },
            t,
        ))
    }

    /// Mean negative log-softmax of the true class over the batch rows,
    /// stabilized by max subtraction. Returns a scalar node.
    pub fn softmax_cross_entropy(&mut self, logits: NodeId, labels: &[usize]) -> Result<NodeId> {
        let (n, c) = self.check_2d(logits, "softmax_cross_entropy")?;
        if labels.len() != n {
            return Err(AutodiffError::ShapeMismatch {
                op: "softmax_cross_entropy",
                lhs: vec![n, c],
                rhs: vec![labels.len()],
            });
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= c) {
            return Err(AutodiffError::Data(format!(
                "label {bad} out of range for {c} classes"
            )));
        }
        let src = self.value(logits).data();
        let mut probs = vec![T::zero(); n * c];
        let mut loss = T::zero();
        for i in 0..n {
            let row = &src[i * c..(i + 1) * c];
            let prow = &mut probs[i * c..(i + 1) * c];
            softmax_row(row, None, prow);
            loss = loss - prow[labels[i]].ln();
        }
        loss = loss / T::of_f64(n as f64);
        Ok(self.push(
            Op::SoftmaxCrossEntropy {
                logits: logits.0,
                labels: labels.to_vec(),
                probs,
            },
            Tensor::scalar(loss),
        ))
    }

    /// Row lookup: out[i, :] = table[ids[i], :].
    pub fn gather_rows(&mut self, table: NodeId, ids: &[usize]) -> Result<NodeId> {
        let (v, d) = self.check_2d(table, "gather_rows")?;
        if let Some(&bad) = ids.iter().find(|&&i| i >= v) {
            return Err(AutodiffError::Data(format!(
                "id {bad} out of range for table with {v} rows"
            )));
        }
        let src = self.value(table).data();
        let mut out = Vec::with_capacity(ids.len() * d);
        for &i in ids {
            out.extend_from_slice(&src[i * d..(i + 1) * d]);
        }
        let t = Tensor::from_vec(out, vec![ids.len(), d])?;
        Ok(self.push(
            Op::GatherRows {
                table: table.0,
                ids: ids.to_vec(),
            },
            t,
        ))
    }

    // ── backward ────────────────────────────────────────────────────

    /// Reverse accumulation from a scalar loss node. Gradients of nodes not
    /// on a path to the loss remain absent.
    pub fn backward(&mut self, loss: NodeId) -> Result<()> {
        if loss.0 >= self.nodes.len() {
            return Err(AutodiffError::Usage("backward: unknown node".into()));
        }
        if !self.nodes[loss.0].tensor.is_scalar() {
            return Err(AutodiffError::Usage(format!(
                "backward requires a scalar loss, got shape {:?}",
                self.nodes[loss.0].tensor.shape()
            )));
        }
        for node in &mut self.nodes {
            node.tensor.grad = None;
        }
        self.nodes[loss.0].tensor.grad = Some(vec![T::one()]);
        for i in (0..=loss.0).rev() {
            if self.nodes[i].tensor.grad.is_none() || !self.nodes[i].tensor.requires_grad {
                continue;
            }
            let op = std::mem::replace(&mut self.nodes[i].op, Op::Leaf);
            let grad = self.nodes[i].tensor.grad.take().expect("checked above");
            self.propagate(i, &op, &grad);
            self.nodes[i].tensor.grad = Some(grad);
            self.nodes[i].op = op;
        }
        Ok(())
    }

    fn requires(&self, id: usize) -> bool {
        self.nodes[id].tensor.requires_grad
    }

    fn accumulate(&mut self, id: usize, delta: Vec<T>) {
        let t = &mut self.nodes[id].tensor;
        debug_assert_eq!(delta.len(), t.numel());
        match &mut t.grad {
            Some(g) => {
                for (gv, dv) in g.iter_mut().zip(&delta) {
                    *gv = *gv + *dv;
                }
            }
            None => t.grad = Some(delta),
        }
    }

    fn data_of(&self, id: usize) -> &[T] {
        self.nodes[id].tensor.data()
    }

    fn shape_of(&self, id: usize) -> &[usize] {
        self.nodes[id].tensor.shape()
    }

    fn propagate(&mut self, node: usize, op: &Op<T>, g: &[T]) {
        match op {
            Op::Leaf => {}
            Op::MatMul { a, b } => {
                let (m, k) = (self.shape_of(*a)[0], self.shape_of(*a)[1]);
                let n = self.shape_of(*b)[1];
                if self.requires(*a) {
                    // dA = g · Bᵀ
                    let mut da = vec![T::zero(); m * k];
                    kernels::matmul_bt(g, self.data_of(*b), m, n, k, &mut da);
                    self.accumulate(*a, da);
                }
                if self.requires(*b) {
                    // dB = Aᵀ · g
                    let mut db = vec![T::zero(); k * n];
                    kernels::matmul_at(self.data_of(*a), g, m, k, n, &mut db);
                    self.accumulate(*b, db);
                }
            }
            Op::Add { a, b } => {
                if self.requires(*a) {
                    self.accumulate(*a, g.to_vec());
                }
                if self.requires(*b) {
                    self.accumulate(*b, g.to_vec());
                }
            }
            Op::AddBiasRow { a, bias } => {
                if self.requires(*a) {
                    self.accumulate(*a, g.to_vec());
                }
                if self.requires(*bias) {
                    let d = self.shape_of(*bias)[0];
                    let mut db = vec![T::zero(); d];
                    for row in g.chunks_exact(d) {
                        for (o, &gv) in db.iter_mut().zip(row) {
                            *o = *o + gv;
                        }
                    }
                    self.accumulate(*bias, db);
                }
            }
            Op::Mul { a, b } => {
                if self.requires(*a) {
                    let da = g
                        .iter()
                        .zip(self.data_of(*b))
                        .map(|(&gv, &bv)| gv * bv)
                        .collect();
                    self.accumulate(*a, da);
                }
                if self.requires(*b) {
                    let db = g
                        .iter()
                        .zip(self.data_of(*a))
                        .map(|(&gv, &av)| gv * av)
                        .collect();
                    self.accumulate(*b, db);
                }
            }
            Op::Relu { a } => {
                if self.requires(*a) {
                    let y = self.nodes[node].tensor.data();
                    let da = g
                        .iter()
                        .zip(y)
                        .map(|(&gv, &yv)| if yv > T::zero() { gv } else { T::zero() })
                        .collect();
                    self.accumulate(*a, da);
                }
            }
            Op::Tanh { a } => {
                if self.requires(*a) {
                    let y = self.nodes[node].tensor.data();
                    let da = g
                        .iter()
                        .zip(y)
                        .map(|(&gv, &yv)| gv * (T::one() - yv * yv))
                        .collect();
                    self.accumulate(*a, da);
                }
            }
            Op::Scale { a, c } => {
                if self.requires(*a) {
                    let da = g.iter().map(|&gv| gv * *c).collect();
                    self.accumulate(*a, da);
                }
            }
            Op::Transpose { a } => {
                if self.requires(*a) {
                    let (m, n) = (self.shape_of(*a)[0], self.shape_of(*a)[1]);
                    // g has shape n×m
                    let mut da = vec![T::zero(); m * n];
                    kernels::transpose(g, n, m, &mut da);
                    self.accumulate(*a, da);
                }
            }
            Op::Reshape { a } => {
                if self.requires(*a) {
                    self.accumulate(*a, g.to_vec());
                }
            }
            Op::SliceCols { a, start, len } => {
                if self.requires(*a) {
                    let (m, n) = (self.shape_of(*a)[0], self.shape_of(*a)[1]);
                    let mut da = vec![T::zero(); m * n];
                    for i in 0..m {
                        da[i * n + start..i * n + start + len]
                            .copy_from_slice(&g[i * len..(i + 1) * len]);
                    }
                    self.accumulate(*a, da);
                }
            }
            Op::SliceRows { a, start, len } => {
                if self.requires(*a) {
                    let (m, n) = (self.shape_of(*a)[0], self.shape_of(*a)[1]);
                    let mut da = vec![T::zero(); m * n];
                    da[start * n..(start + len) * n].copy_from_slice(g);
                    self.accumulate(*a, da);
                }
            }
            Op::ConcatCols { parts } => {
                let widths: Vec<usize> = parts.iter().map(|&p| self.shape_of(p)[1]).collect();
                let total: usize = widths.iter().sum();
                let m = self.shape_of(parts[0])[0];
                let mut offset = 0;
                for (&p, &w) in parts.iter().zip(&widths) {
                    if self.requires(p) {
                        let mut dp = vec![T::zero(); m * w];
                        for i in 0..m {
                            dp[i * w..(i + 1) * w]
                                .copy_from_slice(&g[i * total + offset..i * total + offset + w]);
                        }
                        self.accumulate(p, dp);
                    }
                    offset += w;
                }
            }
            Op::MeanRows { a } => {
                if self.requires(*a) {
                    let (l, d) = (self.shape_of(*a)[0], self.shape_of(*a)[1]);
                    let inv = T::one() / T::of_f64(l as f64);
                    let mut da = vec![T::zero(); l * d];
                    for row in da.chunks_exact_mut(d) {
                        for (o, &gv) in row.iter_mut().zip(g) {
                            *o = gv * inv;
                        }
                    }
                    self.accumulate(*a, da);
                }
            }
            Op::SumAll { a } => {
                if self.requires(*a) {
                    let da = vec![g[0]; self.nodes[*a].tensor.numel()];
                    self.accumulate(*a, da);
                }
            }
            Op::SoftmaxRows { a } => {
                if self.requires(*a) {
                    let y = self.nodes[node].tensor.data();
                    let n = self.shape_of(*a)[1];
                    let mut da = vec![T::zero(); y.len()];
                    for ((drow, yrow), grow) in da
                        .chunks_exact_mut(n)
                        .zip(y.chunks_exact(n))
                        .zip(g.chunks_exact(n))
                    {
                        let dot: T = grow.iter().zip(yrow).map(|(&gv, &yv)| gv * yv).sum();
                        for ((d, &yv), &gv) in drow.iter_mut().zip(yrow).zip(grow) {
                            *d = yv * (gv - dot);
                        }
                    }
                    self.accumulate(*a, da);
                }
            }
            Op::Conv2d {
                input,
                kernels: kern,
                bias,
            } => {
                let is = self.shape_of(*input).to_vec();
                let ks = self.shape_of(*kern).to_vec();
                let (h, w, cin, k, cout) = (is[0], is[1], is[2], ks[0], ks[3]);
                if self.requires(*input) {
                    let mut din = vec![T::zero(); h * w * cin];
                    kernels::conv2d_backward_input(
                        g,
                        self.data_of(*kern),
                        h,
                        w,
                        cin,
                        k,
                        cout,
                        &mut din,
                    );
                    self.accumulate(*input, din);
                }
                if self.requires(*kern) || self.requires(*bias) {
                    let mut dk = vec![T::zero(); k * k * cin * cout];
                    let mut db = vec![T::zero(); cout];
                    kernels::conv2d_backward_params(
                        g,
                        self.data_of(*input),
                        h,
                        w,
                        cin,
                        k,
                        cout,
                        &mut dk,
                        &mut db,
                    );
                    if self.requires(*kern) {
                        self.accumulate(*kern, dk);
                    }
                    if self.requires(*bias) {
                        self.accumulate(*bias, db);
                    }
                }
            }
            Op::MaxPool2 { input, argmax } => {
                if self.requires(*input) {
                    let mut din = vec![T::zero(); self.nodes[*input].tensor.numel()];
                    for (&src, &gv) in argmax.iter().zip(g) {
                        din[src] = din[src] + gv;
                    }
                    self.accumulate(*input, din);
                }
            }
            Op::LayerNorm {
                x,
                gain,
                shift,
                stats,
            } => {
                let (l, d) = (self.shape_of(*x)[0], self.shape_of(*x)[1]);
                let inv_d = T::one() / T::of_f64(d as f64);
                let want_ln = self.requires(*gain) || self.requires(*shift);
                let want_x = self.requires(*x);
                let mut dgain = vec![T::zero(); if want_ln { d } else { 0 }];
                let mut dshift = vec![T::zero(); if want_ln { d } else { 0 }];
                let mut dx = vec![T::zero(); if want_x { l * d } else { 0 }];
                {
                    let xv = self.data_of(*x);
                    let gv = self.data_of(*gain);
                    for i in 0..l {
                        let (mean, rstd) = stats[i];
                        let grow = &g[i * d..(i + 1) * d];
                        let xrow = &xv[i * d..(i + 1) * d];
                        if want_ln {
                            for j in 0..d {
                                let xhat = (xrow[j] - mean) * rstd;
                                dgain[j] = dgain[j] + grow[j] * xhat;
                                dshift[j] = dshift[j] + grow[j];
                            }
                        }
                        if want_x {
                            let dxrow = &mut dx[i * d..(i + 1) * d];
                            let mut m1 = T::zero();
                            let mut m2 = T::zero();
                            for j in 0..d {
                                let xhat = (xrow[j] - mean) * rstd;
                                let dy = grow[j] * gv[j];
                                m1 = m1 + dy;
                                m2 = m2 + dy * xhat;
                            }
                            m1 = m1 * inv_d;
                            m2 = m2 * inv_d;
                            for j in 0..d {
                                let xhat = (xrow[j] - mean) * rstd;
                                let dy = grow[j] * gv[j];
                                dxrow[j] = rstd * (dy - m1 - xhat * m2);
                            }
                        }
                    }
                }
                if self.requires(*gain) {
                    self.accumulate(*gain, dgain);
                }
                if self.requires(*shift) {
                    self.accumulate(*shift, dshift);
                }
                if want_x {
                    self.accumulate(*x, dx);
                }
            }
            Op::SoftmaxCrossEntropy {
                logits,
                labels,
                probs,
            } => {
                if self.requires(*logits) {
                    let c = self.shape_of(*logits)[1];
                    let n = labels.len();
                    let gs = g[0] / T::of_f64(n as f64);
                    let mut dl = vec![T::zero(); n * c];
                    for i in 0..n {
                        for j in 0..c {
                            let indicator = if j == labels[i] { T::one() } else { T::zero() };
                            dl[i * c + j] = gs * (probs[i * c + j] - indicator);
                        }
                    }
                    self.accumulate(*logits, dl);
                }
            }
            Op::GatherRows { table, ids } => {
                if self.requires(*table) {
                    let d = self.shape_of(*table)[1];
                    let mut dt = vec![T::zero(); self.nodes[*table].tensor.numel()];
                    for (i, &row) in ids.iter().enumerate() {
                        let src = &g[i * d..(i + 1) * d];
                        let dst = &mut dt[row * d..(row + 1) * d];
                        for (o, &gv) in dst.iter_mut().zip(src) {
                            *o = *o + gv;
                        }
                    }
                    self.accumulate(*table, dt);
                }
            }
        }
    }
}

/// Stabilized softmax of one row into `out`; masked columns get zero.
fn softmax_row<T: Element>(row: &[T], mask: Option<&[bool]>, out: &mut [T]) {
    let active = |j: usize| mask.is_none_or(|m| m[j]);
    let mut max = T::neg_infinity();
    for (j, &v) in row.iter().enumerate() {
        if active(j) && v > max {
            max = v;
        }
    }
    let mut sum = T::zero();
    for (j, (&v, o)) in row.iter().zip(out.iter_mut()).enumerate() {
        if active(j) {
            *o = (v - max).exp();
            sum = sum + *o;
        } else {
            *o = T::zero();
        }
    }
    for o in out.iter_mut() {
        *o = *o / sum;
    }
}
