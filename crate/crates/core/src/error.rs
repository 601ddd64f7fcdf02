use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("system too large for dense treatment: {n_sites} sites (limit {limit})")]
    TooLarge { n_sites: usize, limit: usize },

    #[error("matrix is not Hermitian (max asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("vector is not normalized (norm deviation {0:.3e})")]
    NotNormalized(f64),

    #[error("inputs are not orthogonal (|overlap| = {0:.3e})")]
    NotOrthogonal(f64),

    #[error("symmetry {kind} is not defined for the {model} model")]
    IncompatibleSymmetry { kind: String, model: String },

    #[error("training set needs both labels, found only {0:+}")]
    SingleClass(i8),

    #[error("class {0} has no training members")]
    EmptyClass(usize),

    #[error("empty parameter region")]
    EmptyRegion,

    #[error("negative eigenvalue {0:.3e} in a Gram matrix")]
    NegativeEigenvalue(f64),

    #[error("expectation has imaginary residue {0:.3e}")]
    ImaginaryResidue(f64),

    #[error("negative variance {0:.3e}")]
    NegativeVariance(f64),

    #[error("linear algebra failure: {0}")]
    Numerical(String),

    #[error("malformed {what}: {reason}")]
    Format { what: &'static str, reason: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Format {
            what,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
