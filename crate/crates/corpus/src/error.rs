use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("configuration error: {0}")]
    Config(String),

    /// Bad records, duplicate ids, impossible splits. Messages carry the
    /// record index or id where one applies.
    #[error("data error: {0}")]
    Data(String),

    #[error("image error: {0}")]
    Image(#[from] jpeg_ela::JpegElaError),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}

/// Maps an i/o failure to an error that names the file involved.
pub(crate) fn io_at(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> CorpusError {
    let path = path.into();
    move |source| CorpusError::Io { path, source }
}

pub type Result<T> = std::result::Result<T, CorpusError>;
