use autodiff::{multi_head_attention, BoundParams, Element, Graph, NodeId, ParamStore};
use rand_chacha::ChaCha8Rng;

use crate::blocks::{maybe_dropout, AttnParams, FfnParams, LinearParams, NormParams};
use crate::config::ModelConfig;
use crate::encoders::{ImageEncoderParams, TextEncoderParams};
use crate::error::{ModelError, Result};
use crate::featurize::{FeatureNeeds, Sample};
use crate::registry::Model;

/// One co-attentive stage: each stream's queries attend over the other
/// stream's keys and values, both directions computed from the stage
/// inputs, then the usual feedforward with residuals and layer norms.
pub struct CoattnBlockParams {
    v_attn: AttnParams,
    v_norm1: NormParams,
    v_ffn: FfnParams,
    v_norm2: NormParams,
    t_attn: AttnParams,
    t_norm1: NormParams,
    t_ffn: FfnParams,
    t_norm2: NormParams,
}

impl CoattnBlockParams {
    pub fn register<T: Element>(store: &mut ParamStore<T>, prefix: &str, d: usize) -> Result<Self> {
        Ok(CoattnBlockParams {
            v_attn: AttnParams::register(store, &format!("{prefix}.v.attn"), d)?,
            v_norm1: NormParams::register(store, &format!("{prefix}.v.norm1"), d)?,
            v_ffn: FfnParams::register(store, &format!("{prefix}.v.ffn"), d)?,
            v_norm2: NormParams::register(store, &format!("{prefix}.v.norm2"), d)?,
            t_attn: AttnParams::register(store, &format!("{prefix}.t.attn"), d)?,
            t_norm1: NormParams::register(store, &format!("{prefix}.t.norm1"), d)?,
            t_ffn: FfnParams::register(store, &format!("{prefix}.t.ffn"), d)?,
            t_norm2: NormParams::register(store, &format!("{prefix}.t.norm2"), d)?,
        })
    }
}

pub struct CoattnBlockOutput {
    pub v: NodeId,
    pub t: NodeId,
    /// Per-head visual-query-over-text attention matrices.
    pub v_weights: Vec<NodeId>,
    /// Per-head textual-query-over-regions attention matrices.
    pub t_weights: Vec<NodeId>,
}

#[allow(clippy::too_many_arguments)]
pub fn coattention_block<T: Element>(
    g: &mut Graph<T>,
    bound: &BoundParams,
    v: NodeId,
    t: NodeId,
    params: &CoattnBlockParams,
    heads: usize,
    text_mask: Option<&[bool]>,
    dropout: f64,
    mut rng: Option<&mut ChaCha8Rng>,
) -> Result<CoattnBlockOutput> {
    let dv = *g.shape(v).last().unwrap_or(&0);
    let dt = *g.shape(t).last().unwrap_or(&0);
    if dv != dt {
        return Err(ModelError::Config(format!(
            "cross-attention requires equal stream widths; got {dv} and {dt}"
        )));
    }
    let v_weights = params.v_attn.bind(bound);
    let t_weights = params.t_attn.bind(bound);
    let v_att = multi_head_attention(g, v, t, t, &v_weights, heads, text_mask)?;
    let t_att = multi_head_attention(g, t, v, v, &t_weights, heads, None)?;

    let v_drop = maybe_dropout(g, v_att.output, dropout, rng.as_deref_mut())?;
    let v1 = {
        let sum = g.add(v, v_drop)?;
        params.v_norm1.apply(g, bound, sum)?
    };
    let v_fed = params.v_ffn.apply(g, bound, v1)?;
    let v_fed = maybe_dropout(g, v_fed, dropout, rng.as_deref_mut())?;
    let v_out = {
        let sum = g.add(v1, v_fed)?;
        params.v_norm2.apply(g, bound, sum)?
    };

    let t_drop = maybe_dropout(g, t_att.output, dropout, rng.as_deref_mut())?;
    let t1 = {
        let sum = g.add(t, t_drop)?;
        params.t_norm1.apply(g, bound, sum)?
    };
    let t_fed = params.t_ffn.apply(g, bound, t1)?;
    let t_fed = maybe_dropout(g, t_fed, dropout, rng)?;
    let t_out = {
        let sum = g.add(t1, t_fed)?;
        params.t_norm2.apply(g, bound, sum)?
    };

    Ok(CoattnBlockOutput {
        v: v_out,
        t: t_out,
        v_weights: v_att.head_weights,
        t_weights: t_att.head_weights,
    })
}

/// Two-stream encoder: independent self-attention prefixes, co-attentive
/// trailing blocks, and a classifier on the pointwise product of the
/// pooled stream states.
pub struct CoattnModel<T: Element> {
    cfg: ModelConfig,
    store: ParamStore<T>,
    text: TextEncoderParams,
    image: ImageEncoderParams,
    co: Vec<CoattnBlockParams>,
    head: LinearParams,
}

impl<T: Element> CoattnModel<T> {
    pub fn new(cfg: &ModelConfig, vocab_size: usize, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let s = &cfg.stream;
        if s.d_v != s.d_t {
            return Err(ModelError::Config(format!(
                "the two-stream model requires equal stream widths; got {} and {}",
                s.d_v, s.d_t
            )));
        }
        let mut store = ParamStore::new(seed);
        let text = TextEncoderParams::register(
            &mut store,
            "text",
            vocab_size,
            cfg.max_len,
            s.d_t,
            s.heads,
            s.t_layers - s.coattn_pairs,
            cfg.dropout,
        )?;
        let image = ImageEncoderParams::register(
            &mut store,
            "image",
            cfg.region_dim(),
            cfg.regions(),
            s.d_v,
            s.heads,
            s.v_layers - s.coattn_pairs,
            cfg.dropout,
            s.visual_positions,
        )?;
        let co = (0..s.coattn_pairs)
            .map(|i| CoattnBlockParams::register(&mut store, &format!("co{i}"), s.d_v))
            .collect::<Result<Vec<_>>>()?;
        let head = LinearParams::register(&mut store, "head.cls", s.d_v, 2)?;
        Ok(CoattnModel {
            cfg: cfg.clone(),
            store,
            text,
            image,
            co,
            head,
        })
    }

    /// Final stream states for one sample, co-attention applied.
    pub fn stream_states(
        &self,
        g: &mut Graph<T>,
        bound: &BoundParams,
        sample: &Sample,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(NodeId, NodeId)> {
        let regions = sample.regions.as_ref().ok_or_else(|| {
            ModelError::Data(format!("sample {} has no region features", sample.id))
        })?;
        let mut t = self
            .text
            .states(g, bound, &sample.tokens, &sample.mask, rng.as_deref_mut())?;
        let mut v = self.image.states(g, bound, regions, rng.as_deref_mut())?;
        for block in &self.co {
            let out = coattention_block(
                g,
                bound,
                v,
                t,
                block,
                self.cfg.stream.heads,
                Some(&sample.mask),
                self.cfg.dropout,
                rng.as_deref_mut(),
            )?;
            v = out.v;
            t = out.t;
        }
        Ok((v, t))
    }
}

impl<T: Element> Model<T> for CoattnModel<T> {
    fn name(&self) -> &'static str {
        "coattn"
    }

    fn needs(&self) -> FeatureNeeds {
        FeatureNeeds {
            tokens: true,
            regions: true,
            ela: false,
        }
    }

    fn store(&self) -> &ParamStore<T> {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore<T> {
        &mut self.store
    }

    fn forward(
        &self,
        g: &mut Graph<T>,
        bound: &BoundParams,
        sample: &Sample,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<NodeId> {
        let (v, t) = self.stream_states(g, bound, sample, rng)?;
        let h_v = g.mean_rows(v)?;
        let h_t = g.slice_rows(t, 0, 1)?;
        let product = g.mul(h_v, h_t)?;
        self.head.apply(g, bound, product)
    }
}
