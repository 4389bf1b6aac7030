use thiserror::Error;

/// Errors raised by every module of the crate.
///
/// The variants are grouped by the process exit code the CLI maps them to:
/// input validation (2), numerical failure (3) and violated mathematical
/// assumptions (4).
#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported field: {0}")]
    UnsupportedField(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("element is not prime: {0}")]
    NotPrime(String),

    #[error("matrices do not commute (residual {0:e})")]
    NonCommuting(f64),

    #[error("matrix is singular (smallest singular value {0:e})")]
    Singular(f64),

    #[error("matrix is not unitriangular (deviation {0:e})")]
    NotUnitriangular(f64),

    #[error("matrix is not unitary (deviation {0:e})")]
    NotUnitary(f64),

    #[error("representation is undefined for non-translation element")]
    NonTranslation,

    #[error("eigenvalue clustering failed: {0}")]
    Clustering(String),

    #[error("function is not twisted-periodic with the given exponent (residual {0:e})")]
    NotTwistedPeriodic(f64),

    #[error("translation law violated (residual {0:e})")]
    TranslationLaw(f64),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("assumption violated: {0}")]
    Assumption(String),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code used by the command line driver.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::UnsupportedField(_)
            | Error::InvalidInput(_)
            | Error::DimensionMismatch(_)
            | Error::NotPrime(_)
            | Error::Io(_)
            | Error::Json(_)
            | Error::NonTranslation
            | Error::NonCommuting(_)
            | Error::NotUnitriangular(_)
            | Error::Singular(_) => 2,
            Error::Clustering(_)
            | Error::Numerical(_)
            | Error::NotTwistedPeriodic(_)
            | Error::TranslationLaw(_) => 3,
            Error::NotUnitary(_) | Error::Assumption(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
