use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{what} = {value} is outside the valid range {range}")]
    Domain {
        what: &'static str,
        value: String,
        range: String,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("preselection leaves no support: {0}")]
    EmptySupport(String),

    #[error("dimension error: {0}")]
    Dimension(String),
}

impl Error {
    pub(crate) fn domain(what: &'static str, value: impl ToString, range: impl ToString) -> Self {
        Error::Domain {
            what,
            value: value.to_string(),
            range: range.to_string(),
        }
    }

    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
