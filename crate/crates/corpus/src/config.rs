use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CorpusError, Result};
use crate::templates::TemplateSets;

/// How headlines and images relate to the label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorpusMode {
    /// Label decides everything: satire gets absurd headlines and (with
    /// `splice_probability`) spliced images, regular gets mundane headlines
    /// and clean images.
    Simple,
    /// Label is the XOR-like function of a text cue and an image cue, with
    /// cell counts chosen so neither cue alone predicts well.
    CrossModal,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorpusConfig {
    pub n_satire: usize,
    pub n_regular: usize,
    /// Side length of the generated square images.
    #[serde(default = "default_image_size")]
    pub image_size: usize,
    /// Chance that a satire article's image is spliced (simple mode only;
    /// cross-modal mode sets the image cue from its cell structure).
    #[serde(default = "default_splice_probability")]
    pub splice_probability: f64,
    #[serde(default = "default_host_quality")]
    pub host_quality: u8,
    #[serde(default = "default_donor_quality")]
    pub donor_quality: u8,
    pub seed: u64,
    #[serde(default = "default_mode")]
    pub mode: CorpusMode,
    /// Headline templates; the built-in sets unless overridden.
    #[serde(default)]
    pub templates: TemplateSets,
}

fn default_image_size() -> usize {
    128
}

fn default_splice_probability() -> f64 {
    1.0
}

fn default_host_quality() -> u8 {
    95
}

fn default_donor_quality() -> u8 {
    60
}

fn default_mode() -> CorpusMode {
    CorpusMode::Simple
}

impl CorpusConfig {
    pub fn new(n_satire: usize, n_regular: usize, seed: u64) -> Self {
        CorpusConfig {
            n_satire,
            n_regular,
            image_size: default_image_size(),
            splice_probability: default_splice_probability(),
            host_quality: default_host_quality(),
            donor_quality: default_donor_quality(),
            seed,
            mode: default_mode(),
            templates: TemplateSets::default(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CorpusError::Config(format!("{}: {e}", path.display())))?;
        let cfg: CorpusConfig = toml::from_str(&text)
            .map_err(|e| CorpusError::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_satire < 1 || self.n_regular < 1 {
            return Err(CorpusError::Config(
                "both class counts must be at least 1".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.splice_probability) {
            return Err(CorpusError::Config(format!(
                "splice probability {} outside [0, 1]",
                self.splice_probability
            )));
        }
        for (name, q) in [
            ("host quality", self.host_quality),
            ("donor quality", self.donor_quality),
        ] {
            if !(1..=100).contains(&q) {
                return Err(CorpusError::Config(format!("{name} {q} outside 1..=100")));
            }
        }
        if self.image_size < 64 {
            return Err(CorpusError::Config(format!(
                "image size {} too small to place splice patches; need 64",
                self.image_size
            )));
        }
        self.templates.validate()?;
        Ok(())
    }
}
