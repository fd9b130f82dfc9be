use autodiff::{BoundParams, Element, Graph, NodeId, ParamStore};
use rand_chacha::ChaCha8Rng;

use crate::blocks::LinearParams;
use crate::config::ModelConfig;
use crate::encoders::{ImageEncoderParams, TextEncoderParams};
use crate::error::{ModelError, Result};
use crate::featurize::{FeatureNeeds, Sample};
use crate::registry::Model;

/// Headline-only classifier: the text stream with a linear head on the
/// pooled cls state.
pub struct TextModel<T: Element> {
    store: ParamStore<T>,
    encoder: TextEncoderParams,
    head: LinearParams,
}

impl<T: Element> TextModel<T> {
    pub fn new(cfg: &ModelConfig, vocab_size: usize, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let s = &cfg.stream;
        let mut store = ParamStore::new(seed);
        let encoder = TextEncoderParams::register(
            &mut store,
            "text",
            vocab_size,
            cfg.max_len,
            s.d_t,
            s.heads,
            s.t_layers,
            cfg.dropout,
        )?;
        let head = LinearParams::register(&mut store, "head.cls", s.d_t, 2)?;
        Ok(TextModel {
            store,
            encoder,
            head,
        })
    }

    pub fn encoder(&self) -> &TextEncoderParams {
        &self.encoder
    }
}

impl<T: Element> Model<T> for TextModel<T> {
    fn name(&self) -> &'static str {
        "text"
    }

    fn needs(&self) -> FeatureNeeds {
        FeatureNeeds {
            tokens: true,
            regions: false,
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
        let (_, pooled) = self
            .encoder
            .encode(g, bound, &sample.tokens, &sample.mask, rng)?;
        self.head.apply(g, bound, pooled)
    }
}

/// Thumbnail-only classifier: the region stream with a linear head on
/// the mean-pooled state.
pub struct ImageModel<T: Element> {
    store: ParamStore<T>,
    encoder: ImageEncoderParams,
    head: LinearParams,
}

impl<T: Element> ImageModel<T> {
    pub fn new(cfg: &ModelConfig, seed: u64) -> Result<Self> {
        cfg.validate()?;
        let s = &cfg.stream;
        let mut store = ParamStore::new(seed);
        let encoder = ImageEncoderParams::register(
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
        let head = LinearParams::register(&mut store, "head.cls", s.d_v, 2)?;
        Ok(ImageModel {
            store,
            encoder,
            head,
        })
    }

    pub fn encoder(&self) -> &ImageEncoderParams {
        &self.encoder
    }
}

impl<T: Element> Model<T> for ImageModel<T> {
    fn name(&self) -> &'static str {
        "image"
    }

    fn needs(&self) -> FeatureNeeds {
        FeatureNeeds {
            tokens: false,
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
        let regions = sample.regions.as_ref().ok_or_else(|| {
            ModelError::Data(format!("sample {} has no region features", sample.id))
        })?;
        let (_, pooled) = self.encoder.encode(g, bound, regions, rng)?;
        self.head.apply(g, bound, pooled)
    }
}
