//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{what} needs dimension >= {min}, got {got}")]
    InvalidDimension {
        what: &'static str,
        min: usize,
        got: usize,
    },

    #[error("invalid {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what}: expected length {expected}, got {got}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("{what} index {index} out of range (< {bound})")]
    IndexOutOfRange {
        what: &'static str,
        index: usize,
        bound: usize,
    },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("matrix is not unitary (max deviation {deviation:.3e})")]
    NotUnitary { deviation: f64 },

    #[error("{what} is not normalized (deviation {deviation:.3e})")]
    NotNormalized { what: &'static str, deviation: f64 },

    #[error(
        "exponential action did not converge: reached {achieved:.3e} with {segments} segments of \
         {terms} terms, requested {requested:.3e}"
    )]
    Convergence {
        requested: f64,
        achieved: f64,
        segments: usize,
        terms: usize,
    },

    #[error("numerical check failed: {context} = {value:.3e} exceeds {limit:.3e}")]
    Numerical {
        context: &'static str,
        value: f64,
        limit: f64,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code the CLI maps this error to.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 2,
            Error::Convergence { .. } | Error::Numerical { .. } => 3,
            Error::Io(_) => 1,
            // Everything else is a misuse of the library surface reachable
            // only through bad configuration when driven from the CLI.
            _ => 2,
        }
    }
}
