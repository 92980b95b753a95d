use std::path::PathBuf;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] l2proj::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("{path}: row {row}: {message}")]
    MalformedRow { path: PathBuf, row: usize, message: String },

    #[error("{path}: no column named `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("config: {0}")]
    Config(String),

    #[error("missing required setting `{0}`")]
    MissingField(&'static str),

    #[error("{0}")]
    Data(String),

    #[error("test targets leaked into training: {0}")]
    Leak(String),

    #[error("{0} is empty")]
    EmptyInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> Error {
    let path = path.into();
    move |source| Error::Io { path, source }
}
