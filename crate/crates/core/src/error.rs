use thiserror::Error;

/// Errors raised by the library.
///
/// `InvalidInput` covers violated preconditions (bad dimensions, values out of
/// range) and `Numerical` covers failures that only show up while computing
/// (singular matrices, empty posteriors). The CLI maps them to different exit
/// codes.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    InvalidInput { field: &'static str, reason: String },

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("information matrix is singular (eigenvalue {eigenvalue:e})")]
    Singular { eigenvalue: f64 },

    #[error("correlation strength {strength} outside the open interval ({lower}, {upper})")]
    StrengthOutOfRange { strength: f64, lower: f64, upper: f64 },

    #[error("posterior vanishes everywhere on the grid")]
    ZeroPosterior,

    #[error("numerical failure: {0}")]
    Numerical(String),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidInput {
            field,
            reason: reason.into(),
        }
    }

    /// True for failures of the computation itself rather than of its inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Singular { .. } | Error::ZeroPosterior | Error::Numerical(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
