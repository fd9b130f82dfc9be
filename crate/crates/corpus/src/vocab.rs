use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{io_at, CorpusError, Result};

pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;
pub const CLS_ID: usize = 2;

/// Lowercased word vocabulary with dense ids. Ids 0..=2 are reserved for
/// pad/unk/cls; real tokens start at 3 in first-appearance order, which
/// makes rebuilds from the same input reproduce the same mapping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    ids: HashMap<String, usize>,
    min_freq: usize,
}

/// Lowercase alphanumeric runs; everything else separates tokens.
pub fn word_tokens(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            current.extend(ch.to_lowercase());
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

pub fn build_vocab<S: AsRef<str>>(headlines: &[S], min_freq: usize) -> Result<Vocab> {
    if headlines.is_empty() {
        return Err(CorpusError::Data(
            "vocabulary needs at least one headline".into(),
        ));
    }
    let mut counts: HashMap<String, usize> = HashMap::new();
    let mut order = Vec::new();
    for headline in headlines {
        for token in word_tokens(headline.as_ref()) {
            let count = counts.entry(token.clone()).or_insert(0);
            if *count == 0 {
                order.push(token);
            }
            *count += 1;
        }
    }
    let mut vocab = Vocab {
        tokens: vec!["<pad>".into(), "<unk>".into(), "<cls>".into()],
        ids: HashMap::new(),
        min_freq,
    };
    for token in order {
        if counts[&token] >= min_freq {
            vocab.ids.insert(token.clone(), vocab.tokens.len());
            vocab.tokens.push(token);
        }
    }
    Ok(vocab)
}

impl Vocab {
    /// Total id count, reserved ids included.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn min_freq(&self) -> usize {
        self.min_freq
    }

    pub fn id_of(&self, token: &str) -> Option<usize> {
        self.ids.get(token).copied()
    }

    pub fn token_of(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(|s| s.as_str())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = VocabFile {
            min_freq: self.min_freq,
            tokens: self.tokens[3..].to_vec(),
        };
        let text = serde_json::to_string_pretty(&file)
            .map_err(|e| CorpusError::Data(format!("vocabulary does not serialize: {e}")))?;
        std::fs::write(path, text).map_err(io_at(path))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_at(path))?;
        let file: VocabFile = serde_json::from_str(&text)
            .map_err(|e| CorpusError::Data(format!("vocabulary file {}: {e}", path.display())))?;
        let mut vocab = Vocab {
            tokens: vec!["<pad>".into(), "<unk>".into(), "<cls>".into()],
            ids: HashMap::new(),
            min_freq: file.min_freq,
        };
        for token in file.tokens {
            if vocab.ids.contains_key(&token) {
                return Err(CorpusError::Data(format!(
                    "vocabulary file {}: duplicate token {token}",
                    path.display()
                )));
            }
            vocab.ids.insert(token.clone(), vocab.tokens.len());
            vocab.tokens.push(token);
        }
        Ok(vocab)
    }
}

#[derive(Serialize, Deserialize)]
struct VocabFile {
    min_freq: usize,
    tokens: Vec<String>,
}

/// Fixed-length id sequence: cls, then the headline's tokens (unk where
/// unknown), padded out. The mask is true at real positions.
pub fn tokenize(headline: &str, vocab: &Vocab, max_len: usize) -> (Vec<usize>, Vec<bool>) {
    let mut ids = Vec::with_capacity(max_len);
    let mut mask = Vec::with_capacity(max_len);
    ids.push(CLS_ID);
    mask.push(true);
    for token in word_tokens(headline) {
        if ids.len() == max_len {
            break;
        }
        ids.push(vocab.id_of(&token).unwrap_or(UNK_ID));
        mask.push(true);
    }
    while ids.len() < max_len {
        ids.push(PAD_ID);
        mask.push(false);
    }
    (ids, mask)
}
