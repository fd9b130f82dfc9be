use autodiff::{
    multi_head_attention, AttentionWeights, BoundParams, Element, Graph, NodeId, ParamId,
    ParamStore,
};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

/// Feedforward hidden width as a multiple of the stream width.
pub(crate) const FFN_MULT: usize = 2;

pub(crate) struct LinearParams {
    w: ParamId,
    b: ParamId,
}

impl LinearParams {
    pub fn register<T: Element>(
        store: &mut ParamStore<T>,
        prefix: &str,
        d_in: usize,
        d_out: usize,
    ) -> Result<Self> {
        Ok(LinearParams {
            w: store.glorot_matrix(&format!("{prefix}.w"), d_in, d_out)?,
            b: store.zeros(&format!("{prefix}.b"), vec![d_out])?,
        })
    }

    pub fn apply<T: Element>(
        &self,
        g: &mut Graph<T>,
        bound: &BoundParams,
        x: NodeId,
    ) -> Result<NodeId> {
        let h = g.matmul(x, bound.node(self.w))?;
        Ok(g.add_bias_row(h, bound.node(self.b))?)
    }
}

pub(crate) struct AttnParams {
    wq: ParamId,
    wk: ParamId,
    wv: ParamId,
    wo: ParamId,
}

impl AttnParams {
    pub fn register<T: Element>(store: &mut ParamStore<T>, prefix: &str, d: usize) -> Result<Self> {
        Ok(AttnParams {
            wq: store.glorot_matrix(&format!("{prefix}.wq"), d, d)?,
            wk: store.glorot_matrix(&format!("{prefix}.wk"), d, d)?,
            wv: store.glorot_matrix(&format!("{prefix}.wv"), d, d)?,
            wo: store.glorot_matrix(&format!("{prefix}.wo"), d, d)?,
        })
    }

    pub fn bind(&self, bound: &BoundParams) -> AttentionWeights {
        AttentionWeights {
            wq: bound.node(self.wq),
            wk: bound.node(self.wk),
            wv: bound.node(self.wv),
            wo: bound.node(self.wo),
        }
    }
}

pub(crate) struct NormParams {
    gain: ParamId,
    shift: ParamId,
}

impl NormParams {
    pub fn register<T: Element>(store: &mut ParamStore<T>, prefix: &str, d: usize) -> Result<Self> {
        Ok(NormParams {
            gain: store.ones(&format!("{prefix}.gain"), vec![d])?,
            shift: store.zeros(&format!("{prefix}.shift"), vec![d])?,
        })
    }

    pub fn apply<T: Element>(
        &self,
        g: &mut Graph<T>,
        bound: &BoundParams,
        x: NodeId,
    ) -> Result<NodeId> {
        Ok(g.layer_norm(x, bound.node(self.gain), bound.node(self.shift))?)
    }
}

pub(crate) struct FfnParams {
    lin1: LinearParams,
    lin2: LinearParams,
}

impl FfnParams {
    pub fn register<T: Element>(store: &mut ParamStore<T>, prefix: &str, d: usize) -> Result<Self> {
        Ok(FfnParams {
            lin1: LinearParams::register(store, &format!("{prefix}.lin1"), d, FFN_MULT * d)?,
            lin2: LinearParams::register(store, &format!("{prefix}.lin2"), FFN_MULT * d, d)?,
        })
    }

    pub fn apply<T: Element>(
        &self,
        g: &mut Graph<T>,
        bound: &BoundParams,
        x: NodeId,
    ) -> Result<NodeId> {
        let h = self.lin1.apply(g, bound, x)?;
        let h = g.relu(h);
        self.lin2.apply(g, bound, h)
    }
}

/// Inverted dropout as a constant mask node; contributes no parameters
/// and is skipped entirely outside training.
pub(crate) fn maybe_dropout<T: Element>(
    g: &mut Graph<T>,
    x: NodeId,
    p: f64,
    rng: Option<&mut ChaCha8Rng>,
) -> Result<NodeId> {
    let Some(rng) = rng else { return Ok(x) };
    if p == 0.0 {
        return Ok(x);
    }
    let shape = g.shape(x).to_vec();
    let keep = 1.0 - p;
    let mask: Vec<T> = (0..shape.iter().product::<usize>())
        .map(|_| {
            if rng.gen::<f64>() < keep {
                T::of_f64(1.0 / keep)
            } else {
                T::zero()
            }
        })
        .collect();
    let m = g.constant(mask, shape)?;
    Ok(g.mul(x, m)?)
}

/// One standard post-norm transformer block: self-attention and a relu
/// feedforward, each wrapped in residual + layer norm.
pub(crate) struct BlockParams {
    attn: AttnParams,
    norm1: NormParams,
    ffn: FfnParams,
    norm2: NormParams,
}

impl BlockParams {
    pub fn register<T: Element>(store: &mut ParamStore<T>, prefix: &str, d: usize) -> Result<Self> {
        Ok(BlockParams {
            attn: AttnParams::register(store, &format!("{prefix}.attn"), d)?,
            norm1: NormParams::register(store, &format!("{prefix}.norm1"), d)?,
            ffn: FfnParams::register(store, &format!("{prefix}.ffn"), d)?,
            norm2: NormParams::register(store, &format!("{prefix}.norm2"), d)?,
        })
    }

    #[allow(clippy::too_many_arguments)]
    pub fn apply<T: Element>(
        &self,
        g: &mut Graph<T>,
        bound: &BoundParams,
        x: NodeId,
        heads: usize,
        key_mask: Option<&[bool]>,
        dropout: f64,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<NodeId> {
        let weights = self.attn.bind(bound);
        let attended = multi_head_attention(g, x, x, x, &weights, heads, key_mask)?;
        let attended = maybe_dropout(g, attended.output, dropout, rng.as_deref_mut())?;
        let x = {
            let sum = g.add(x, attended)?;
            self.norm1.apply(g, bound, sum)?
        };
        let fed = self.ffn.apply(g, bound, x)?;
        let fed = maybe_dropout(g, fed, dropout, rng)?;
        let sum = g.add(x, fed)?;
        self.norm2.apply(g, bound, sum)
    }
}
