use autodiff::{BoundParams, Element, Graph, NodeId, ParamStore};
use rand_chacha::ChaCha8Rng;

use crate::blocks::LinearParams;
use crate::config::{FusionKind, ModelConfig};
use crate::encoders::{ImageEncoderParams, TextEncoderParams};
use crate::error::{ModelError, Result};
use crate::featurize::{FeatureNeeds, Sample};
use crate::registry::Model;

enum FusionHead {
    Linear(LinearParams),
    Mlp(LinearParams, LinearParams),
}

/// Late fusion: both streams run independently with no cross-attention,
/// and only their pooled states meet in the head. Text states are
/// therefore invariant to the image and vice versa.
pub struct FusionModel<T: Element> {
    kind: FusionKind,
    cfg: ModelConfig,
    store: ParamStore<T>,
    text: TextEncoderParams,
    image: ImageEncoderParams,
    head: FusionHead,
}

impl<T: Element> FusionModel<T> {
    pub fn new(cfg: &ModelConfig, vocab_size: usize, seed: u64, kind: FusionKind) -> Result<Self> {
        cfg.validate()?;
        let s = &cfg.stream;
        if matches!(kind, FusionKind::Average | FusionKind::ElementwiseProduct) && s.d_v != s.d_t {
            return Err(ModelError::Config(format!(
                "{kind:?} fusion requires equal stream widths; got {} and {}; configure a projection by matching d_v to d_t",
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
            s.t_layers,
            cfg.dropout,
        )?;
        let image = ImageEncoderParams::register(
            &mut store,
            "image",
            cfg.region_dim(),
            cfg.regions(),
            s.d_v,
            s.heads,
            s.v_layers,
            cfg.dropout,
            s.visual_positions,
        )?;
        let head = match kind {
            FusionKind::Average | FusionKind::ElementwiseProduct => {
                FusionHead::Linear(LinearParams::register(&mut store, "head.cls", s.d_t, 2)?)
            }
            FusionKind::ConcatMlp => FusionHead::Mlp(
                LinearParams::register(&mut store, "head.fc1", s.d_v + s.d_t, cfg.fusion_hidden)?,
                LinearParams::register(&mut store, "head.fc2", cfg.fusion_hidden, 2)?,
            ),
        };
        Ok(FusionModel {
            kind,
            cfg: cfg.clone(),
            store,
            text,
            image,
            head,
        })
    }

    pub fn kind(&self) -> FusionKind {
        self.kind
    }

    /// Final text-stream states; exposed so tests can observe that late
    /// fusion keeps them independent of the image.
    pub fn text_states(
        &self,
        g: &mut Graph<T>,
        bound: &BoundParams,
        sample: &Sample,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<NodeId> {
        self.text
            .states(g, bound, &sample.tokens, &sample.mask, rng)
    }
}

impl<T: Element> Model<T> for FusionModel<T> {
    fn name(&self) -> &'static str {
        match self.kind {
            FusionKind::Average => "fuse-avg",
            FusionKind::ConcatMlp => "fuse-concat",
            FusionKind::ElementwiseProduct => "fuse-prod",
        }
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
        mut rng: Option<&mut ChaCha8Rng>,
    ) -> Result<NodeId> {
        let regions = sample.regions.as_ref().ok_or_else(|| {
            ModelError::Data(format!("sample {} has no region features", sample.id))
        })?;
        let (_, h_t) =
            self.text
                .encode(g, bound, &sample.tokens, &sample.mask, rng.as_deref_mut())?;
        let (_, h_v) = self.image.encode(g, bound, regions, rng)?;
        match (&self.head, self.kind) {
            (FusionHead::Linear(head), FusionKind::Average) => {
                let sum = g.add(h_v, h_t)?;
                let mean = g.scale(sum, T::of_f64(0.5));
                head.apply(g, bound, mean)
            }
            (FusionHead::Linear(head), _) => {
                let product = g.mul(h_v, h_t)?;
                head.apply(g, bound, product)
            }
            (FusionHead::Mlp(fc1, fc2), _) => {
                let joined = g.concat_cols(&[h_v, h_t])?;
                let hidden = fc1.apply(g, bound, joined)?;
                let hidden = g.relu(hidden);
                fc2.apply(g, bound, hidden)
            }
        }
    }

    fn trainable(&self, param_name: &str) -> bool {
        !self.cfg.frozen_encoders || param_name.starts_with("head.")
    }
}
