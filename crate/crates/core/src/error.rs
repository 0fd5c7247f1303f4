use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Model parameters rejected at construction.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Input data violated an invariant (e.g. `x > y` in a truncated pair).
    #[error("validation error: {0}")]
    Validation(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Iterative or quadrature routine failed to deliver the requested accuracy.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The estimator is not defined on this sample (zero tail mass, overflowing weights).
    #[error("estimator undefined: {0}")]
    Undefined(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// True for failures of numerical machinery rather than of user input.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Numerical(_) | Error::Undefined(_))
    }
}
