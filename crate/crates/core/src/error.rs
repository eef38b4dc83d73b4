use thiserror::Error;

use crate::contrasts::Violation;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("matrix is not positive semidefinite (eigenvalue {eigenvalue:e}, scale {scale:e})")]
    NotPsd { eigenvalue: f64, scale: f64 },

    #[error("invalid contrast specification: {}", format_violations(.0))]
    Contrast(Vec<Violation>),

    /// The test has no information: every covariance block is zero.
    #[error("degenerate test: {0}")]
    DegenerateTest(String),

    /// Malformed or unusable input data (CSV rows, contrast files).
    #[error("input error: {0}")]
    Input(String),

    #[error("configuration error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("replication {replication} failed: {source}")]
    Replication {
        replication: usize,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// True for errors caused by the caller's data, files or parameters
    /// rather than by a numerical failure.
    pub fn is_input_error(&self) -> bool {
        match self {
            Error::Domain(_)
            | Error::Dimension(_)
            | Error::Contrast(_)
            | Error::Input(_)
            | Error::Config { .. }
            | Error::Io(_)
            | Error::Json(_) => true,
            Error::NotPsd { .. } | Error::DegenerateTest(_) => false,
            Error::Replication { source, .. } => source.is_input_error(),
        }
    }
}

fn format_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join("; ")
}
