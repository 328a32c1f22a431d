use thiserror::Error;

use crate::link::ErrorProfile;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the domain of the function it was passed to.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration violates one of its invariants.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// An iterative procedure did not settle. `partial` carries whatever
    /// estimates were available when it gave up.
    #[error("convergence failure: {message}")]
    Convergence {
        message: String,
        partial: Vec<ErrorProfile>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    /// Process exit status used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Config(_) => 2,
            Error::Convergence { .. } => 3,
            Error::Io(_) | Error::Csv(_) | Error::Json(_) => 4,
        }
    }
}
