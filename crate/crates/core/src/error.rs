use thiserror::Error;

/// Errors raised anywhere in the toolkit.
///
/// The variants fall into three families that the command line maps onto
/// distinct exit codes: configuration problems, numerical failures, and
/// artifact I/O problems.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("index {index} out of range (valid: {valid})")]
    Index { index: usize, valid: String },

    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    #[error("solver error: {0}")]
    Solver(String),

    #[error("coercivity lost: smallest generalized eigenvalue {value:e} is not positive")]
    CoercivityLost { value: f64 },

    #[error("internal error: {0}")]
    Internal(String),

    #[error("artifact error: {0}")]
    Artifact(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        Error::Config(msg.into())
    }

    pub(crate) fn solver(msg: impl Into<String>) -> Self {
        Error::Solver(msg.into())
    }

    /// Prefixes the message with the phase it occurred in, keeping the variant.
    pub fn in_phase(self, phase: &str) -> Self {
        match self {
            Error::Config(m) => Error::Config(format!("{phase}: {m}")),
            Error::Solver(m) => Error::Solver(format!("{phase}: {m}")),
            Error::Internal(m) => Error::Internal(format!("{phase}: {m}")),
            Error::Artifact(m) => Error::Artifact(format!("{phase}: {m}")),
            other => other,
        }
    }

    /// True for errors caused by invalid user input rather than numerics.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_) | Error::Json(_))
    }

    /// True for numerical failures (solvers, eigensolvers, lost coercivity).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Solver(_) | Error::CoercivityLost { .. } | Error::Internal(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
