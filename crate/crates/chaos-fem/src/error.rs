use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Failure modes surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Quadrature hit a non-finite coefficient or forcing value.
    #[error("assembly failed on element {element}: {reason}")]
    Assembly { element: usize, reason: String },

    #[error("evaluation failed: {0}")]
    Evaluation(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("solver failure: {0}")]
    Solver(String),

    #[error("unsupported basis: {0}")]
    UnsupportedBasis(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Prefix an error message with the sample index it occurred at.
    pub(crate) fn tag_sample(self, r: usize) -> Error {
        match self {
            Error::Assembly { element, reason } => Error::Assembly {
                element,
                reason: format!("sample {r}: {reason}"),
            },
            Error::Evaluation(msg) => Error::Evaluation(format!("sample {r}: {msg}")),
            Error::Solver(msg) => Error::Solver(format!("sample {r}: {msg}")),
            other => other,
        }
    }
}
