use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A size computation overflowed the platform integer.
    #[error("size error: {0}")]
    Size(String),

    /// A documented precondition does not hold for the supplied inputs.
    #[error("precondition violated for `{field}`: {rule}")]
    Precondition { field: String, rule: String },

    /// Kernel construction produced an invalid probability mass.
    #[error("invalid kernel: {0}")]
    Kernel(String),

    /// Sample data not usable by the estimator (e.g. too much censoring).
    #[error("data error: {0}")]
    Data(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("internal error: {0}")]
    Internal(String),

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub(crate) fn precondition(field: impl Into<String>, rule: impl Into<String>) -> Self {
        Error::Precondition {
            field: field.into(),
            rule: rule.into(),
        }
    }

    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    /// Short machine-readable tag for the error family.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Size(_) => "size",
            Error::Precondition { .. } => "precondition",
            Error::Kernel(_) => "kernel",
            Error::Data(_) => "data",
            Error::Parse(_) => "parse",
            Error::Internal(_) => "internal",
            Error::Io { .. } => "io",
        }
    }
}
