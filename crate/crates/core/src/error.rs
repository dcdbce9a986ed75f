use thiserror::Error;

/// Errors raised by the contract solvers and their supporting primitives.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of a function.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    /// A structural precondition on the inputs does not hold.
    #[error("precondition violated in {op}: {detail}")]
    Precondition { op: &'static str, detail: String },

    /// A model invariant was violated while building a value.
    #[error("invalid {field}: {detail}")]
    Invalid { field: String, detail: String },

    /// An objective failed the concavity spot check.
    #[error("objective is not concave on [{lo}, {hi}]: {detail}")]
    NotConcave { lo: f64, hi: f64, detail: String },

    /// An exhaustive search would exceed its combinatorial budget.
    #[error("search budget exceeded: requested {size}, limit {limit}")]
    BudgetExceeded { size: String, limit: String },

    /// Scenario or solution file could not be parsed.
    #[error("parse error in {source_name}: {detail}")]
    Parse { source_name: String, detail: String },

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn precondition(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Precondition {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn invalid(field: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Invalid {
            field: field.into(),
            detail: detail.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
