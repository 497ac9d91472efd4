use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    /// A prime configuration was malformed.
    #[error("invalid prime configuration: {0}")]
    Config(String),

    /// A parameter was outside the range the construction requires.
    #[error("invalid parameter `{field}`: {reason}")]
    Parameter { field: String, reason: String },

    /// Points or balls from spaces with different numbers of components.
    #[error("component count mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A value was required to lie in Z[1/(p1...pk)].
    #[error("{0} is not an S-element for the configured primes")]
    NotSElement(String),

    /// A rational or list could not be parsed.
    #[error("cannot parse `{input}`: {reason}")]
    Parse { input: String, reason: String },

    /// An internal guarantee was broken. These must never fire.
    #[error("invariant violated: {0}")]
    Invariant(String),

    /// A search that a theorem guarantees to succeed came back empty.
    #[error("theorem violated: {0}")]
    TheoremViolation(String),

    /// A strategy could not produce a move.
    #[error("strategy `{name}` failed: {reason}")]
    Strategy { name: String, reason: String },
}

impl Error {
    /// True for errors caused by bad input rather than a broken computation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::Config(_) | Error::Parameter { .. } | Error::Dimension { .. } | Error::NotSElement(_) | Error::Parse { .. }
        )
    }

    pub(crate) fn parameter(field: &str, reason: impl Into<String>) -> Self {
        Error::Parameter {
            field: field.to_string(),
            reason: reason.into(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
