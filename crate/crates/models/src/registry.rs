use autodiff::{
    gradient_check, AutodiffError, BoundParams, Element, GradCheckReport, GradCheckSettings, Graph,
    NodeId, ParamStore,
};
use rand_chacha::ChaCha8Rng;

use crate::coattn::CoattnModel;
use crate::config::{FusionKind, ModelConfig};
use crate::elacnn::ElaCnnModel;
use crate::error::{ModelError, Result};
use crate::featurize::{FeatureNeeds, Sample};
use crate::fusion::FusionModel;
use crate::unimodal::{ImageModel, TextModel};

/// A classifier under the common training and evaluation harness. One
/// sample in, one [1, 2] logits row out; the graph is rebuilt per call so
/// the same model code serves f32 training and f64 gradient checking.
pub trait Model<T: Element>: Send {
    fn name(&self) -> &'static str;
    fn needs(&self) -> FeatureNeeds;
    fn store(&self) -> &ParamStore<T>;
    fn store_mut(&mut self) -> &mut ParamStore<T>;
    fn forward(
        &self,
        g: &mut Graph<T>,
        bound: &BoundParams,
        sample: &Sample,
        rng: Option<&mut ChaCha8Rng>,
    ) -> Result<NodeId>;

    /// Whether the named parameter receives optimizer updates.
    fn trainable(&self, param_name: &str) -> bool {
        let _ = param_name;
        true
    }
}

pub struct ModelInfo {
    pub name: &'static str,
    pub summary: &'static str,
}

/// Every model the pipeline can train, keyed by registry name.
pub const MODELS: &[ModelInfo] = &[
    ModelInfo {
        name: "elacnn",
        summary: "convolutional net over the raw error-level map",
    },
    ModelInfo {
        name: "text",
        summary: "headline-only transformer encoder",
    },
    ModelInfo {
        name: "image",
        summary: "region-only transformer encoder",
    },
    ModelInfo {
        name: "fuse-avg",
        summary: "late fusion: averaged pooled states into a linear head",
    },
    ModelInfo {
        name: "fuse-concat",
        summary: "late fusion: concatenated pooled states into an MLP",
    },
    ModelInfo {
        name: "coattn",
        summary: "two-stream encoder with co-attention and product head",
    },
];

pub fn model_names() -> Vec<&'static str> {
    MODELS.iter().map(|m| m.name).collect()
}

/// Construct a registered model with freshly initialized parameters.
pub fn build_model<T: Element>(
    name: &str,
    cfg: &ModelConfig,
    vocab_size: usize,
    seed: u64,
) -> Result<Box<dyn Model<T>>> {
    match name {
        "elacnn" => Ok(Box::new(ElaCnnModel::new(cfg, seed)?)),
        "text" => Ok(Box::new(TextModel::new(cfg, vocab_size, seed)?)),
        "image" => Ok(Box::new(ImageModel::new(cfg, seed)?)),
        "fuse-avg" => Ok(Box::new(FusionModel::new(
            cfg,
            vocab_size,
            seed,
            FusionKind::Average,
        )?)),
        "fuse-concat" => Ok(Box::new(FusionModel::new(
            cfg,
            vocab_size,
            seed,
            FusionKind::ConcatMlp,
        )?)),
        "coattn" => Ok(Box::new(CoattnModel::new(cfg, vocab_size, seed)?)),
        other => Err(ModelError::Config(format!(
            "unknown model '{other}'; available: {}",
            model_names().join(", ")
        ))),
    }
}

/// Central-difference check of the full model loss against its reverse
/// gradients on one sample. Run with T = f64; single precision drowns
/// the difference quotient in rounding noise.
pub fn gradcheck_model<T: Element>(
    model: &dyn Model<T>,
    sample: &Sample,
    settings: &GradCheckSettings,
) -> Result<GradCheckReport> {
    let label = sample.label;
    let report = gradient_check(model.store(), settings, |g, bound| {
        let logits = model
            .forward(g, bound, sample, None)
            .map_err(|e| AutodiffError::Config(e.to_string()))?;
        g.softmax_cross_entropy(logits, &[label])
    })?;
    Ok(report)
}
