//! Crate-wide error type.

use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Tensor(#[from] candle_core::Error),

    #[error("corpus: {0}")]
    Corpus(String),

    #[error("tokenizer: {0}")]
    Tokenizer(String),

    #[error("invalid config: {0}")]
    Config(String),

    #[error("model: {0}")]
    Model(String),

    #[error("stimuli: {0}")]
    Stimuli(String),

    #[error("conllu: {0}")]
    Conllu(String),

    #[error("verbhood: {0}")]
    Verbhood(String),

    #[error("experiment: {0}")]
    Experiment(String),

    #[error("cli: {0}")]
    Cli(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
