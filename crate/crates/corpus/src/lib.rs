//! Synthetic news corpus: article records and manifest I/O, a seeded
//! generator pairing templated headlines with textured JPEG thumbnails
//! (spliced or clean), stratified splitting, word-level tokenization, and
//! patch-grid visual features.

mod article;
mod config;
mod error;
mod features;
mod generate;
mod split;
pub mod templates;
mod vocab;

pub use article::{load_manifest, write_manifest, Article, Label};
pub use config::{CorpusConfig, CorpusMode};
pub use error::{CorpusError, Result};
pub use features::{patch_features, resize_bilinear, RegionFeatures, TARGET_SIZE};
pub use generate::{
    generate_synthetic_corpus, load_splices, write_splices, GeneratedCorpus, SpliceEntry,
};
pub use split::split;
pub use vocab::{build_vocab, tokenize, word_tokens, Vocab, CLS_ID, PAD_ID, UNK_ID};
