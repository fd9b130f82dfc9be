//! Model zoo for the satire pipeline: a fixed CNN over error-level maps,
//! unimodal transformer encoders, two late-fusion combiners, and the
//! two-stream co-attention model. All models expose the same [`Model`]
//! trait and are built by registry name, so the trainer and CLI never
//! branch on architecture.

mod blocks;
mod coattn;
mod config;
mod elacnn;
mod encoders;
mod error;
mod featurize;
mod fusion;
mod registry;
mod unimodal;

pub use coattn::{coattention_block, CoattnBlockOutput, CoattnBlockParams, CoattnModel};
pub use config::{ElaCnnConfig, FusionKind, ModelConfig, StreamConfig};
pub use elacnn::ElaCnnModel;
pub use encoders::{ImageEncoderParams, TextEncoderParams};
pub use error::{ModelError, Result};
pub use featurize::{ela_input, featurize, FeatureNeeds, Sample};
pub use fusion::FusionModel;
pub use registry::{build_model, gradcheck_model, model_names, Model, ModelInfo, MODELS};
pub use unimodal::{ImageModel, TextModel};
