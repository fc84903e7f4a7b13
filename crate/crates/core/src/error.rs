use std::path::PathBuf;

/// Errors produced by the solver and the data pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A state was supplied in the wrong units (natural vs transformed).
    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("extrapolation error: {0}")]
    Extrapolation(String),

    #[error("factorization failed for tau = {tau}, theta = {theta}")]
    FactorizationFailed { tau: f64, theta: f64 },

    /// A diagnostic whose hypotheses are not met (e.g. the decay condition).
    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn invalid_argument(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
