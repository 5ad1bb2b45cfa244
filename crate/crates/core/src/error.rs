use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("unknown variable `{0}`")]
    UnknownVariable(String),

    #[error("unknown constraint `{0}`")]
    UnknownConstraint(String),

    #[error("duplicate variable `{0}`")]
    DuplicateVariable(String),

    #[error("variable `{0}` has an empty domain")]
    EmptyDomain(String),

    #[error("value {value} is outside the domain of `{variable}`")]
    ValueOutsideDomain { variable: String, value: i64 },

    #[error("malformed constraint: {0}")]
    MalformedConstraint(String),

    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("search space of {product} tuples exceeds the enumeration cap of {cap}")]
    EnumerationCap { product: u128, cap: u128 },

    #[error("usage: {0}")]
    Usage(String),

    #[error("inconsistent removal log: {0}")]
    LogCorruption(String),

    #[error("invalid bundle: {0}")]
    Bundle(String),
}

impl Error {
    pub(crate) fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }
}
