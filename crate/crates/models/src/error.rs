use autodiff::AutodiffError;
use corpus::CorpusError;
use jpeg_ela::JpegElaError;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error(transparent)]
    Autodiff(#[from] AutodiffError),

    #[error(transparent)]
    Corpus(#[from] CorpusError),

    #[error(transparent)]
    Image(#[from] JpegElaError),
}

pub type Result<T> = std::result::Result<T, ModelError>;
