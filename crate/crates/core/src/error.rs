use thiserror::Error;

/// Errors produced by the design, simulation and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument or configuration value is outside its valid domain.
    #[error("invalid input: {0}")]
    Validation(String),

    /// A filter design routine could not produce a filter.
    #[error("filter design failed: {0}")]
    DesignFailure(String),

    /// Two objects that must agree (e.g. shared masking filters) do not.
    #[error("consistency check failed: {0}")]
    Consistency(String),

    /// A data file could not be parsed.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
