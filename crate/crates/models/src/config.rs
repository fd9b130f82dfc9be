use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{ModelError, Result};

/// The error-level CNN is architecture-locked: two 5-wide conv layers of
/// 32 kernels with 2x2 pooling on a 128x128x3 input, then a 256-wide MLP.
/// The fields exist so a config file states the architecture explicitly,
/// but validation rejects any deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ElaCnnConfig {
    pub input: usize,
    pub conv_layers: usize,
    pub kernels: usize,
    pub kernel_width: usize,
    pub pool: usize,
    pub mlp_hidden: usize,
    pub classes: usize,
}

impl Default for ElaCnnConfig {
    fn default() -> Self {
        ElaCnnConfig {
            input: 128,
            conv_layers: 2,
            kernels: 32,
            kernel_width: 5,
            pool: 2,
            mlp_hidden: 256,
            classes: 2,
        }
    }
}

impl ElaCnnConfig {
    pub fn validate(&self) -> Result<()> {
        if *self != ElaCnnConfig::default() {
            return Err(ModelError::Config(format!(
                "the error-level cnn architecture is fixed to {:?}; got {:?}",
                ElaCnnConfig::default(),
                self
            )));
        }
        Ok(())
    }

    /// Spatial side length after each conv+pool stage, ending at the
    /// flatten input. With the fixed architecture: 128 -> 62 -> 29.
    pub fn stage_sides(&self) -> Vec<usize> {
        let mut sides = vec![self.input];
        let mut s = self.input;
        for _ in 0..self.conv_layers {
            s = (s - self.kernel_width + 1) / self.pool;
            sides.push(s);
        }
        sides
    }

    pub fn flatten(&self) -> usize {
        let s = *self.stage_sides().last().unwrap();
        s * s * self.kernels
    }
}

/// Depth, width, and co-attention wiring of the two transformer streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StreamConfig {
    pub v_layers: usize,
    pub t_layers: usize,
    pub d_v: usize,
    pub d_t: usize,
    pub heads: usize,
    /// How many trailing blocks of each stream are co-attentive in the
    /// two-stream model; the earlier blocks are plain self-attention.
    pub coattn_pairs: usize,
    /// Region order carries no meaning in a patch grid unless position
    /// embeddings are enabled, so they are off by default.
    pub visual_positions: bool,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig::toy()
    }
}

impl StreamConfig {
    pub fn toy() -> Self {
        StreamConfig {
            v_layers: 2,
            t_layers: 3,
            d_v: 128,
            d_t: 128,
            heads: 4,
            coattn_pairs: 2,
            visual_positions: false,
        }
    }

    /// Published-depth preset: 6 visual and 12 textual blocks, every
    /// visual block paired. Selectable, but nothing here pretrains it.
    pub fn paper_scale() -> Self {
        StreamConfig {
            v_layers: 6,
            t_layers: 12,
            d_v: 256,
            d_t: 256,
            heads: 8,
            coattn_pairs: 6,
            visual_positions: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.v_layers == 0 || self.t_layers == 0 {
            return Err(ModelError::Config(
                "stream depth must be at least one block".into(),
            ));
        }
        if self.d_v == 0 || self.d_t == 0 || self.heads == 0 {
            return Err(ModelError::Config(
                "stream widths and head count must be positive".into(),
            ));
        }
        if !self.d_v.is_multiple_of(self.heads) || !self.d_t.is_multiple_of(self.heads) {
            return Err(ModelError::Config(format!(
                "stream widths {}x{} must divide into {} heads",
                self.d_v, self.d_t, self.heads
            )));
        }
        if self.coattn_pairs > self.v_layers.min(self.t_layers) {
            return Err(ModelError::Config(format!(
                "{} co-attention pairs cannot fit in streams of depth {} and {}",
                self.coattn_pairs, self.v_layers, self.t_layers
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FusionKind {
    /// Mean of the pooled stream states into a linear classifier;
    /// requires equal stream widths.
    Average,
    /// Concatenated pooled states into a hidden-layer MLP.
    ConcatMlp,
    /// Pointwise product of the pooled states into a linear classifier;
    /// this is the two-stream model's own head.
    ElementwiseProduct,
}

/// Everything a model needs beyond its parameters: stream shapes, input
/// featurization, and training-time regularization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub stream: StreamConfig,
    pub elacnn: ElaCnnConfig,
    /// Token positions per headline, leading cls included.
    pub max_len: usize,
    /// Patch grid side; regions = grid^2.
    pub grid: usize,
    /// Resave quality for the error-level input channel.
    pub ela_quality: u8,
    /// Hidden width of the concat-fusion MLP.
    pub fusion_hidden: usize,
    /// Dropout probability applied inside transformer blocks during
    /// training; zero keeps toy runs and gradient checks exact.
    pub dropout: f64,
    /// When set, fusion-model encoder weights are excluded from updates
    /// and only the fusion head trains.
    pub frozen_encoders: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            stream: StreamConfig::toy(),
            elacnn: ElaCnnConfig::default(),
            max_len: 16,
            grid: 4,
            ela_quality: 90,
            fusion_hidden: 256,
            dropout: 0.0,
            frozen_encoders: false,
        }
    }
}

impl ModelConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            ModelError::Config(format!("cannot read model config {}: {e}", path.display()))
        })?;
        let cfg: ModelConfig = toml::from_str(&text)
            .map_err(|e| ModelError::Config(format!("model config {}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.stream.validate()?;
        self.elacnn.validate()?;
        if self.max_len < 2 {
            return Err(ModelError::Config(
                "max_len must fit the cls marker plus at least one token".into(),
            ));
        }
        if self.grid == 0 || !corpus::TARGET_SIZE.is_multiple_of(self.grid) {
            return Err(ModelError::Config(format!(
                "patch grid {} must divide the {} feature frame",
                self.grid,
                corpus::TARGET_SIZE
            )));
        }
        if self.ela_quality == 0 || self.ela_quality > 100 {
            return Err(ModelError::Config(format!(
                "ela quality {} outside 1..=100",
                self.ela_quality
            )));
        }
        if self.fusion_hidden == 0 {
            return Err(ModelError::Config(
                "fusion hidden width must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(ModelError::Config(format!(
                "dropout {} outside [0, 1)",
                self.dropout
            )));
        }
        Ok(())
    }

    pub fn regions(&self) -> usize {
        self.grid * self.grid
    }

    /// Per-region feature width produced by the patch grid.
    pub fn region_dim(&self) -> usize {
        let side = corpus::TARGET_SIZE / self.grid;
        side * side * 3
    }
}
