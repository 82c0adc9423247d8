use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] stabletree_core::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: line {line}: {message}")]
    Csv {
        path: String,
        line: u64,
        message: String,
    },
    #[error("{path}: byte {offset}: {message}")]
    ModelParse {
        path: String,
        offset: usize,
        message: String,
    },
    #[error("{0}")]
    Data(String),
    #[error("columns do not match the model: missing [{}], extra [{}]", missing.join(", "), extra.join(", "))]
    Columns { missing: Vec<String>, extra: Vec<String> },
    #[error("unknown dataset '{name}'; registered: {}", available.join(", "))]
    UnknownDataset { name: String, available: Vec<String> },
    #[error("{0}")]
    Registry(String),
    #[error("{0}")]
    Usage(String),
}

impl Error {
    /// Short machine-readable category, used as the CLI error prefix.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Core(_) => "model",
            Error::Io { .. } => "io",
            Error::Csv { .. } => "csv",
            Error::ModelParse { .. } => "model-file",
            Error::Data(_) => "data",
            Error::Columns { .. } => "columns",
            Error::UnknownDataset { .. } => "unknown-dataset",
            Error::Registry(_) => "registry",
            Error::Usage(_) => "usage",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
