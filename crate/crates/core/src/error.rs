use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed argument, shape mismatch or violated precondition.
    #[error("{0}")]
    Invalid(String),

    #[error("no features survive")]
    NoFeaturesSurvive,

    #[error("stage {stage} of the selector chain ({kind}) left no features")]
    ChainStageEmpty { stage: usize, kind: String },

    #[error("divergence detected at epoch {epoch}")]
    Divergence { epoch: usize },

    #[error("divergence detected during search stage {stage}: {source}")]
    StageDivergence {
        stage: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Format(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
