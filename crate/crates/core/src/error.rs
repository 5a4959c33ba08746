use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: u64,
        message: String,
    },

    #[error("{path}: line {line}: estimate refers to unknown paper `{paper_id}`")]
    UnknownPaper {
        path: PathBuf,
        line: u64,
        paper_id: String,
    },

    #[error("invalid input: {0}")]
    Validation(String),

    #[error("duplicate {kind} `{key}`")]
    Duplicate { kind: &'static str, key: String },

    #[error("empty {0}")]
    Empty(&'static str),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("country `{0}` has zero emissions; carbon intensity is undefined")]
    UndefinedIntensity(String),

    #[error("{0}")]
    Numeric(String),

    #[error("tax feedback did not converge after {iterations} iterations (last iterates {previous} and {last})")]
    NoConvergence {
        iterations: usize,
        previous: f64,
        last: f64,
    },
}

impl Error {
    /// Whether the error stems from bad input rather than a failed computation.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::Parse { .. }
                | Error::UnknownPaper { .. }
                | Error::Validation(_)
                | Error::Duplicate { .. }
                | Error::Empty(_)
                | Error::UnknownScenario(_)
        )
    }
}
