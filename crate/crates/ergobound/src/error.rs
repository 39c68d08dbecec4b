//! Crate-wide error type and process exit-code mapping.

use thiserror::Error;

/// Everything that can go wrong across the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the mathematical domain of a special function.
    #[error("domain error: {0}")]
    Domain(String),

    /// Structurally valid input that cannot be processed (e.g. zero-length sample set).
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    /// A (precoder, CSI, operation) combination with no defined result.
    #[error("unsupported configuration: {0}")]
    UnsupportedConfig(String),

    /// Too few Monte-Carlo samples for the requested estimator.
    #[error("insufficient samples: need at least {needed}, got {got}")]
    InsufficientSamples { needed: u64, got: u64 },

    /// Gram matrix (near-)singular; carries the condition-number estimate.
    #[error("gram matrix ill-conditioned (condition estimate {cond:.3e})")]
    IllConditioned { cond: f64 },

    /// A numerical routine failed to meet its accuracy contract at run time.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Invalid sweep/system configuration (bad file, bad key, bad value).
    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code for the CLI: 2 for configuration problems,
    /// 3 for numerical failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::UnsupportedConfig(_) => 2,
            Error::Domain(_)
            | Error::DegenerateInput(_)
            | Error::InsufficientSamples { .. }
            | Error::IllConditioned { .. }
            | Error::Numerical(_) => 3,
            Error::Io(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
