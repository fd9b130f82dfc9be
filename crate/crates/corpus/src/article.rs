use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{io_at, CorpusError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Satire,
    Regular,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Satire => "satire",
            Label::Regular => "regular",
        }
    }

    /// Class index used by the models: satire = 1, regular = 0.
    pub fn class_index(self) -> usize {
        match self {
            Label::Satire => 1,
            Label::Regular => 0,
        }
    }
}

/// One corpus record. `image_path` is relative to the manifest file's
/// directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub headline: String,
    pub image_path: String,
    pub label: Label,
    pub source: String,
}

impl Article {
    /// Absolute location of the image given the manifest it came from.
    pub fn resolve_image(&self, manifest_path: &Path) -> PathBuf {
        manifest_path
            .parent()
            .unwrap_or_else(|| Path::new(""))
            .join(&self.image_path)
    }
}

/// One JSON object per line, in slice order. Stable bytes for stable input.
pub fn write_manifest(path: &Path, articles: &[Article]) -> Result<()> {
    let mut out = String::new();
    for article in articles {
        out.push_str(&serde_json::to_string(article).map_err(|e| {
            CorpusError::Data(format!("record {} does not serialize: {e}", article.id))
        })?);
        out.push('\n');
    }
    fs::write(path, out).map_err(io_at(path))?;
    Ok(())
}

/// Load and validate a manifest. Every record must parse, carry a fresh id
/// and a non-empty headline, and point at an image that decodes.
pub fn load_manifest(path: &Path) -> Result<Vec<Article>> {
    let text = fs::read_to_string(path).map_err(io_at(path))?;
    let mut articles = Vec::new();
    let mut seen = HashSet::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            return Err(CorpusError::Data(format!("record {index}: empty line")));
        }
        let article: Article = serde_json::from_str(line)
            .map_err(|e| CorpusError::Data(format!("record {index}: {e}")))?;
        if article.headline.trim().is_empty() {
            return Err(CorpusError::Data(format!(
                "record {index}: article {} has an empty headline",
                article.id
            )));
        }
        if !seen.insert(article.id.clone()) {
            return Err(CorpusError::Data(format!(
                "record {index}: duplicate id {}",
                article.id
            )));
        }
        let image = article.resolve_image(path);
        let bytes = fs::read(&image).map_err(|_| {
            CorpusError::Data(format!(
                "record {index}: article {} is missing its image {}",
                article.id,
                image.display()
            ))
        })?;
        jpeg_ela::jpeg_decode(&bytes).map_err(|e| {
            CorpusError::Data(format!(
                "record {index}: article {} has an undecodable image: {e}",
                article.id
            ))
        })?;
        articles.push(article);
    }
    Ok(articles)
}
