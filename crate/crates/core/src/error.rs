use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// The measurement model cannot be built as requested (e.g. a singular
    /// noise covariance); the caller has to regularize its inputs.
    #[error("model error: {0}")]
    Model(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("landmark {0} cannot be triangulated")]
    Degenerate(usize),

    #[error("enumeration guard exceeded: {count} candidates > limit {limit}")]
    GuardExceeded { count: u128, limit: u128 },

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
