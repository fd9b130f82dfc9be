//! Each test binary compiles this module separately and uses a subset.
#![allow(dead_code)]

use autodiff::{BoundParams, Element, Graph, NodeId, ParamStore};
use models::{FeatureNeeds, Model, ModelConfig, Sample, StreamConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const VOCAB: usize = 24;

pub fn mini_config() -> ModelConfig {
    ModelConfig {
        stream: StreamConfig {
            v_layers: 2,
            t_layers: 2,
            d_v: 32,
            d_t: 32,
            heads: 4,
            coattn_pairs: 1,
            visual_positions: false,
        },
        max_len: 8,
        grid: 4,
        ..ModelConfig::default()
    }
}

/// Token-only samples split by vocabulary range: satire headlines draw
/// ids from the low half, regular from the high half. Linearly separable
/// for any model that can read tokens at all.
pub fn separable_text_samples(n: usize, seed: u64, max_len: usize) -> Vec<Sample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = i % 2;
            let band = if label == 1 { 3..13 } else { 13..VOCAB };
            let mut tokens = vec![corpus::CLS_ID];
            let mut mask = vec![true];
            for _ in 0..5 {
                tokens.push(rng.gen_range(band.clone()));
                mask.push(true);
            }
            while tokens.len() < max_len {
                tokens.push(corpus::PAD_ID);
                mask.push(false);
            }
            Sample {
                id: format!("toy-{i}"),
                label,
                tokens,
                mask,
                regions: None,
                ela: None,
            }
        })
        .collect()
}

/// Bare sample carrying nothing but an id and a label, for models that
/// never look at the inputs.
pub fn bare_sample(id: &str, label: usize) -> Sample {
    Sample {
        id: id.to_string(),
        label,
        tokens: Vec::new(),
        mask: Vec::new(),
        regions: None,
        ela: None,
    }
}

pub enum OracleMode {
    /// Emits confident logits for the true class.
    Perfect,
    /// Emits confident logits for the wrong class.
    Inverted,
    /// Emits equal logits, putting every sample exactly on the 0.5
    /// decision boundary.
    Tie,
}

/// Fixed-function stand-in model whose verdict depends only on the
/// sample label, so evaluation outcomes are known in advance.
pub struct OracleModel {
    store: ParamStore<f64>,
    pub mode: OracleMode,
}

impl OracleModel {
    pub fn new(mode: OracleMode) -> Self {
        OracleModel {
            store: ParamStore::new(0),
            mode,
        }
    }
}

impl Model<f64> for OracleModel {
    fn name(&self) -> &'static str {
        "oracle"
    }

    fn needs(&self) -> FeatureNeeds {
        FeatureNeeds {
            tokens: false,
            regions: false,
            ela: false,
        }
    }

    fn store(&self) -> &ParamStore<f64> {
        &self.store
    }

    fn store_mut(&mut self) -> &mut ParamStore<f64> {
        &mut self.store
    }

    fn forward(
        &self,
        g: &mut Graph<f64>,
        _bound: &BoundParams,
        sample: &Sample,
        _rng: Option<&mut ChaCha8Rng>,
    ) -> models::Result<NodeId> {
        let logits = match self.mode {
            OracleMode::Perfect if sample.label == 1 => vec![-2.0, 2.0],
            OracleMode::Perfect => vec![2.0, -2.0],
            OracleMode::Inverted if sample.label == 1 => vec![2.0, -2.0],
            OracleMode::Inverted => vec![-2.0, 2.0],
            OracleMode::Tie => vec![0.0, 0.0],
        };
        Ok(g.constant(logits, vec![1, 2])?)
    }
}

/// Snapshot of every parameter tensor, name to raw values.
pub fn param_snapshot<T: Element>(store: &ParamStore<T>) -> Vec<(String, Vec<T>)> {
    store
        .iter()
        .map(|(_, name, tensor)| (name.to_string(), tensor.data().to_vec()))
        .collect()
}
