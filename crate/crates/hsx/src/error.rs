use thiserror::Error;

/// Crate-wide error type; variants correspond to the failure modes of the
/// individual modules so callers can match on them directly.
#[derive(Debug, Error)]
pub enum Error {
    /// A tailed function whose end samples disagree with its tail constants.
    #[error("tail mismatch: {0}")]
    TailMismatch(String),

    /// Two objects that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The support of the data does not fit strictly inside the grid image.
    #[error("domain too narrow: {0}")]
    DomainTooNarrow(String),

    /// An Eulerian pair violating the energy-density compatibility mu_ac = u_x^2 dx.
    #[error("state not admissible: {0}")]
    NotInD(String),

    /// A Lagrangian state violating the admissibility predicates.
    #[error("lagrangian state not admissible: {0}")]
    NotInF(String),

    /// A relabeling function with nonpositive slope.
    #[error("relabeling not strictly increasing: {0}")]
    NotMonotone(String),

    /// y + H has a flat segment and cannot be inverted.
    #[error("y + H not invertible: {0}")]
    NotInvertible(String),

    /// A path control point outside the normalized convex class.
    #[error("state not in normalized class: {0}")]
    NotInG0(String),

    /// The Galerkin matrix lost positive definiteness.
    #[error("singular Galerkin system: {0}")]
    SingularSystem(String),

    /// A test function whose support is not covered by the computed solution.
    #[error("support escapes grid: {0}")]
    SupportEscapesGrid(String),

    /// Configuration value rejected during validation; `field` is the JSON path.
    #[error("invalid config field `{field}`: {message}")]
    Validation { field: String, message: String },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn validation(field: &str, message: impl Into<String>) -> Self {
        Error::Validation {
            field: field.to_string(),
            message: message.into(),
        }
    }

    /// Stable machine-readable tag for the structured error output.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::TailMismatch(_) => "TailMismatch",
            Error::GridMismatch(_) => "GridMismatch",
            Error::DomainTooNarrow(_) => "DomainTooNarrow",
            Error::NotInD(_) => "NotInD",
            Error::NotInF(_) => "NotInF",
            Error::NotMonotone(_) => "NotMonotone",
            Error::NotInvertible(_) => "NotInvertible",
            Error::NotInG0(_) => "NotInG0",
            Error::SingularSystem(_) => "SingularSystem",
            Error::SupportEscapesGrid(_) => "SupportEscapesGrid",
            Error::Validation { .. } => "ValidationError",
            Error::Parse(_) => "ParseError",
            Error::Io(_) => "IoError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
