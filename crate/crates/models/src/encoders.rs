use autodiff::{BoundParams, Element, Graph, NodeId, ParamId, ParamStore};
use corpus::RegionFeatures;
use rand_chacha::ChaCha8Rng;

use crate::blocks::BlockParams;
use crate::error::{ModelError, Result};

/// Token stream: learned word and position embeddings into a stack of
/// self-attention blocks. Padding is removed from every attention softmax
/// through the key mask, so pad rows can never leak into real positions.
pub struct TextEncoderParams {
    embed: ParamId,
    pos: ParamId,
    blocks: Vec<BlockParams>,
    vocab_rows: usize,
    max_len: usize,
    heads: usize,
    dropout: f64,
}

impl TextEncoderParams {
    #[allow(clippy::too_many_arguments)]
    pub fn register<T: Element>(
        store: &mut ParamStore<T>,
        prefix: &str,
        vocab_size: usize,
        max_len: usize,
        d: usize,
        heads: usize,
        n_blocks: usize,
        dropout: f64,
    ) -> Result<Self> {
        if vocab_size < 3 {
            return Err(ModelError::Config(format!(
                "vocabulary of {vocab_size} lacks the reserved ids"
            )));
        }
        let embed = store.glorot_matrix(&format!("{prefix}.embed"), vocab_size, d)?;
        let pos = store.glorot_matrix(&format!("{prefix}.pos"), max_len, d)?;
        let blocks = (0..n_blocks)
            .map(|i| BlockParams::register(store, &format!("{prefix}.block{i}"), d))
            .collect::<Result<Vec<_>>>()?;
        Ok(TextEncoderParams {
            embed,
            pos,
            blocks,
            vocab_rows: vocab_size,
            max_len,
            heads,
            dropout,
        })
    }

    /// Sequence states after the self-attention stack, one row per token.
    pub fn states<T: Element>(
        &self,
        g: &mut Graph<T>,
        bound: &BoundParams,
        tokens: &[usize],
        mask: &[bool],
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<NodeId> {
        if tokens.is_empty() || tokens.len() > self.max_len {
            return Err(ModelError::Data(format!(
                "token sequence of {} positions does not fit the {}-position table",
                tokens.len(),
                self.max_len
            )));
        }
        if mask.len() != tokens.len() {
            return Err(ModelError::Data(format!(
                "mask of {} entries against {} tokens",
                mask.len(),
                tokens.len()
            )));
        }
        if let Some(&bad) = tokens.iter().find(|&&t| t >= self.vocab_rows) {
            return Err(ModelError::Data(format!(
                "token id {bad} out of range for vocabulary of {}",
                self.vocab_rows
            )));
        }
        let embedded = g.gather_rows(bound.node(self.embed), tokens)?;
        let positions = g.slice_rows(bound.node(self.pos), 0, tokens.len())?;
        let mut x = g.add(embedded, positions)?;
        for block in &self.blocks {
            x = block.apply(
                g,
                bound,
                x,
                self.heads,
                Some(mask),
                self.dropout,
                rng.as_deref_mut(),
            )?;
        }
        Ok(x)
    }

    /// States plus the pooled representation: the state at the leading
    /// cls position.
    pub fn encode<T: Element>(
        &self,
        g: &mut Graph<T>,
        bound: &BoundParams,
        tokens: &[usize],
        mask: &[bool],
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(NodeId, NodeId)> {
        let states = self.states(g, bound, tokens, mask, rng)?;
        let pooled = g.slice_rows(states, 0, 1)?;
        Ok((states, pooled))
    }
}

/// Region stream: a learned projection of patch features into a stack of
/// self-attention blocks. Position embeddings are optional; without them
/// the stack is permutation-equivariant over regions.
pub struct ImageEncoderParams {
    proj_w: ParamId,
    proj_b: ParamId,
    pos: Option<ParamId>,
    blocks: Vec<BlockParams>,
    region_dim: usize,
    n_regions: usize,
    heads: usize,
    dropout: f64,
}

impl ImageEncoderParams {
    #[allow(clippy::too_many_arguments)]
    pub fn register<T: Element>(
        store: &mut ParamStore<T>,
        prefix: &str,
        region_dim: usize,
        n_regions: usize,
        d: usize,
        heads: usize,
        n_blocks: usize,
        dropout: f64,
        positions: bool,
    ) -> Result<Self> {
        let proj_w = store.glorot_matrix(&format!("{prefix}.proj.w"), region_dim, d)?;
        let proj_b = store.zeros(&format!("{prefix}.proj.b"), vec![d])?;
        let pos = if positions {
            Some(store.glorot_matrix(&format!("{prefix}.pos"), n_regions, d)?)
        } else {
            None
        };
        let blocks = (0..n_blocks)
            .map(|i| BlockParams::register(store, &format!("{prefix}.block{i}"), d))
            .collect::<Result<Vec<_>>>()?;
        Ok(ImageEncoderParams {
            proj_w,
            proj_b,
            pos,
            blocks,
            region_dim,
            n_regions,
            heads,
            dropout,
        })
    }

    pub fn states<T: Element>(
        &self,
        g: &mut Graph<T>,
        bound: &BoundParams,
        regions: &RegionFeatures,
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<NodeId> {
        if regions.n_regions() != self.n_regions {
            return Err(ModelError::Config(format!(
                "{} regions against an encoder expecting {}",
                regions.n_regions(),
                self.n_regions
            )));
        }
        if regions.d != self.region_dim {
            return Err(ModelError::Config(format!(
                "region feature width {} does not match the encoder projection of {}",
                regions.d, self.region_dim
            )));
        }
        let data: Vec<T> = regions
            .data()
            .iter()
            .map(|&v| T::of_f64(v as f64))
            .collect();
        let input = g.constant(data, vec![self.n_regions, self.region_dim])?;
        let projected = g.matmul(input, bound.node(self.proj_w))?;
        let mut x = g.add_bias_row(projected, bound.node(self.proj_b))?;
        if let Some(pos) = self.pos {
            x = g.add(x, bound.node(pos))?;
        }
        for block in &self.blocks {
            x = block.apply(
                g,
                bound,
                x,
                self.heads,
                None,
                self.dropout,
                rng.as_deref_mut(),
            )?;
        }
        Ok(x)
    }

    /// States plus the pooled representation: the mean over regions.
    pub fn encode<T: Element>(
        &self,
        g: &mut Graph<T>,
        bound: &BoundParams,
        regions: &RegionFeatures,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<(NodeId, NodeId)> {
        let states = self.states(g, bound, regions, rng)?;
        let pooled = g.mean_rows(states)?;
        Ok((states, pooled))
    }
}
