use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Broad failure class, used by front ends to pick an exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorClass {
    /// Bad input: arguments out of range, malformed files, unsupported regimes.
    Validation,
    /// A numerical procedure failed on otherwise valid input.
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// (p, q) is outside the parameter regime for the given tail index.
    #[error("regime error: {0}")]
    Regime(String),

    /// An empirical quantity has nothing to work with, e.g. no exceedances
    /// above the plug-in threshold or a nonpositive intermediate estimate.
    #[error("degenerate tail: {0}")]
    DegenerateTail(String),

    #[error("no transition root: {0}")]
    Existence(String),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn numeric(msg: impl Into<String>) -> Self {
        Error::Numeric(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable code.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Domain(_) => "E_DOMAIN",
            Error::Regime(_) => "E_REGIME",
            Error::DegenerateTail(_) => "E_DEGENERATE",
            Error::Existence(_) => "E_EXISTENCE",
            Error::Numeric(_) => "E_NUMERIC",
            Error::Parse { .. } => "E_PARSE",
            Error::Validation(_) => "E_VALIDATION",
            Error::Io { .. } => "E_IO",
        }
    }

    pub fn class(&self) -> ErrorClass {
        match self {
            Error::Numeric(_) | Error::Existence(_) | Error::DegenerateTail(_) => {
                ErrorClass::Numeric
            }
            _ => ErrorClass::Validation,
        }
    }

    /// True for failures that a Monte Carlo replication or a rolling window
    /// may legitimately hit (small-sample regime breaks, empty tails).
    pub fn is_skippable(&self) -> bool {
        matches!(
            self,
            Error::Regime(_) | Error::DegenerateTail(_) | Error::Domain(_)
        )
    }
}
