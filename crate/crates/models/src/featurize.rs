use std::path::Path;

use corpus::{patch_features, resize_bilinear, tokenize, Article, RegionFeatures, Vocab};
use jpeg_ela::{ela, jpeg_decode, ImageBuffer};

use crate::config::ModelConfig;
use crate::error::{ModelError, Result};

/// Which input channels a model consumes. Featurization honors this so a
/// text-only run never pays for image decoding or error-level resaves.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureNeeds {
    pub tokens: bool,
    pub regions: bool,
    pub ela: bool,
}

impl FeatureNeeds {
    pub fn union(self, other: FeatureNeeds) -> FeatureNeeds {
        FeatureNeeds {
            tokens: self.tokens || other.tokens,
            regions: self.regions || other.regions,
            ela: self.ela || other.ela,
        }
    }
}

/// One article prepared for a model: token ids with their validity mask,
/// and whichever image channels were requested.
#[derive(Debug, Clone)]
pub struct Sample {
    pub id: String,
    /// Class index; satire is 1.
    pub label: usize,
    pub tokens: Vec<usize>,
    pub mask: Vec<bool>,
    pub regions: Option<RegionFeatures>,
    /// Raw error-level values scaled to [0,1], 128x128x3 row-major.
    pub ela: Option<Vec<f32>>,
}

/// Raw (unamplified) error-level map of `img`, resized to the model's
/// 128x128x3 input frame and scaled to [0,1].
pub fn ela_input(img: &ImageBuffer, quality: u8) -> Result<Vec<f32>> {
    let map = ela(img, quality, 1.0)?;
    let side = corpus::TARGET_SIZE;
    let values: Vec<f32> = if map.width() == side && map.height() == side {
        map.values().iter().map(|&v| v as f32).collect()
    } else {
        let carrier = ImageBuffer::from_pixels(map.width(), map.height(), map.values().to_vec())?;
        resize_bilinear(&carrier, side, side)
    };
    Ok(values.iter().map(|&v| v / 255.0).collect())
}

/// Prepare every article in manifest order. Image-dependent channels are
/// computed from one decode per article.
pub fn featurize(
    articles: &[Article],
    manifest_path: &Path,
    vocab: &Vocab,
    cfg: &ModelConfig,
    needs: FeatureNeeds,
) -> Result<Vec<Sample>> {
    let mut samples = Vec::with_capacity(articles.len());
    for article in articles {
        let (tokens, mask) = tokenize(&article.headline, vocab, cfg.max_len);
        let mut regions = None;
        let mut ela_values = None;
        if needs.regions || needs.ela {
            let path = article.resolve_image(manifest_path);
            let bytes = std::fs::read(&path).map_err(|e| {
                ModelError::Data(format!(
                    "article {}: cannot read image {}: {e}",
                    article.id,
                    path.display()
                ))
            })?;
            let img = jpeg_decode(&bytes)?;
            if needs.regions {
                regions = Some(patch_features(&img, cfg.grid, cfg.grid)?);
            }
            if needs.ela {
                ela_values = Some(ela_input(&img, cfg.ela_quality)?);
            }
        }
        samples.push(Sample {
            id: article.id.clone(),
            label: article.label.class_index(),
            tokens,
            mask,
            regions,
            ela: ela_values,
        });
    }
    Ok(samples)
}
