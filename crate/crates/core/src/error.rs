//! Error type shared by every module of the crate.

use thiserror::Error;

/// Which Stokes measurement basis ran out of counts.
pub use crate::polarization::Basis;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Caller passed an argument outside the operation's domain.
    #[error("invalid argument: {0}")]
    Usage(String),

    /// Configuration document failed parsing or validation; `path` is the
    /// dotted location of the offending key.
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    /// The susceptibility has no transparency peak above the two-level
    /// background, so a FWHM is undefined.
    #[error("no EIT feature: {0}")]
    NoEitFeature(String),

    #[error("quadrature did not converge: estimated relative error {achieved:.3e} > requested {requested:.3e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("fit did not converge after {iterations} iterations (best cost {best_cost:.6e})")]
    NonConvergence {
        iterations: usize,
        best_cost: f64,
        best_point: Vec<f64>,
    },

    #[error("degenerate fit parameters: {0}")]
    Degenerate(String),

    #[error("insufficient statistics in basis {basis}")]
    InsufficientStatistics { basis: Basis },

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn usage(msg: impl Into<String>) -> Self {
        Error::Usage(msg.into())
    }

    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code used by the CLI and the C ABI.
    ///
    /// 0 is success; 2 config or usage, 3 numerical failure, 4 insufficient
    /// statistics, 5 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Config { .. } => 2,
            Error::NoEitFeature(_)
            | Error::Quadrature { .. }
            | Error::NonConvergence { .. }
            | Error::Degenerate(_) => 3,
            Error::InsufficientStatistics { .. } => 4,
            Error::Io(_) => 5,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
