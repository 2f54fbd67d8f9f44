//! Error type shared by all modules.

use thiserror::Error;

/// Crate-wide error enum.
///
/// Variants are grouped by how a caller should react: `Parameter` means the
/// call itself was malformed, `Data` means the input content is unusable,
/// and `Singular` / `CgBreakdown` / `Generation` are numerical failures.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("problem too large: {0}")]
    TooLarge(String),

    #[error("numerical singularity in {0}")]
    Singular(String),

    #[error("conjugate gradient breakdown: {0}")]
    CgBreakdown(String),

    #[error("generation failed: {0}")]
    Generation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// Prefix the message of a numerical error with extra context, e.g. the
    /// name of the update that triggered it.
    pub fn in_context(self, context: &str) -> Self {
        match self {
            Error::Singular(msg) => Error::Singular(format!("{context}: {msg}")),
            Error::CgBreakdown(msg) => Error::CgBreakdown(format!("{context}: {msg}")),
            other => other,
        }
    }
}
