use crate::element::Element;
use crate::error::{AutodiffError, Result};
use crate::graph::{Graph, NodeId};

/// Projection weights for one attention layer, each d×d and unbiased.
pub struct AttentionWeights {
    pub wq: NodeId,
    pub wk: NodeId,
    pub wv: NodeId,
    pub wo: NodeId,
}

pub struct AttentionOutput {
    pub output: NodeId,
    /// Per-head post-softmax weight matrices, Lq×Lk each.
    pub head_weights: Vec<NodeId>,
}

/// Scaled dot-product multi-head attention as a composite of graph
/// primitives. Queries may come from a different sequence than keys and
/// values, which is what the cross-stream layers use. `key_mask`, when
/// present, removes key positions (padding) from every softmax row.
pub fn multi_head_attention<T: Element>(
    graph: &mut Graph<T>,
    queries: NodeId,
    keys: NodeId,
    values: NodeId,
    weights: &AttentionWeights,
    heads: usize,
    key_mask: Option<&[bool]>,
) -> Result<AttentionOutput> {
    let d = *graph
        .shape(queries)
        .last()
        .ok_or_else(|| AutodiffError::Usage("attention on scalar input".into()))?;
    if heads == 0 || d % heads != 0 {
        return Err(AutodiffError::Config(format!(
            "attention width {d} not divisible into {heads} heads"
        )));
    }
    let dh = d / heads;
    let scale = T::of_f64(1.0 / (dh as f64).sqrt());

    let q = graph.matmul(queries, weights.wq)?;
    let k = graph.matmul(keys, weights.wk)?;
    let v = graph.matmul(values, weights.wv)?;

    let mut contexts = Vec::with_capacity(heads);
    let mut head_weights = Vec::with_capacity(heads);
    for h in 0..heads {
        let qh = graph.slice_cols(q, h * dh, dh)?;
        let kh = graph.slice_cols(k, h * dh, dh)?;
        let vh = graph.slice_cols(v, h * dh, dh)?;
        let kht = graph.transpose(kh)?;
        let scores = graph.matmul(qh, kht)?;
        let scaled = graph.scale(scores, scale);
        let attn = graph.softmax_rows(scaled, key_mask)?;
        let ctx = graph.matmul(attn, vh)?;
        contexts.push(ctx);
        head_weights.push(attn);
    }
    let merged = graph.concat_cols(&contexts)?;
    let output = graph.matmul(merged, weights.wo)?;
    Ok(AttentionOutput {
        output,
        head_weights,
    })
}
