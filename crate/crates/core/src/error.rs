use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("invalid simplex state: {0}")]
    InvalidState(String),

    /// The vector field is undefined at the given state (e.g. zero mean payoff).
    #[error("singular state: {0}")]
    SingularState(String),

    #[error("integration produced non-finite values at step {step} ({detail})")]
    IntegrationBlowup { step: usize, detail: String },

    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("unsupported game: {0}")]
    UnsupportedGame(String),

    #[error("eigen decomposition failed: {0}")]
    EigenFailure(String),

    #[error("no complex eigenvalue pair: {0}")]
    NoCyclicMode(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("line {line}: {detail}")]
    Parse { line: usize, detail: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by bad user input rather than runtime failure.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_)
                | Error::InvalidState(_)
                | Error::UnsupportedGame(_)
                | Error::DegenerateInput(_)
                | Error::Parse { .. }
        )
    }
}
