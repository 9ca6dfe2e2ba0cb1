use thiserror::Error;

/// Errors produced by the scheduling library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// A statistic is undefined for the given input (constant vector, too few samples).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Inputs disagree on dimensions.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A structural invariant of a domain value does not hold.
    #[error("invalid {what}: {reason}")]
    Invalid { what: &'static str, reason: String },

    /// An order or problem violates precedence constraints.
    #[error("constraint violation: {0}")]
    Constraint(String),

    /// The request exceeds a configured size cap.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// Malformed TSPLIB text.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// No budget in a sweep admitted any graph.
    #[error("empty trade-off curve: no graph fits any budget")]
    EmptyCurve,
}

impl Error {
    pub(crate) fn invalid(what: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid {
            what,
            reason: reason.into(),
        }
    }

    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
