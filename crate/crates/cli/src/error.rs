use std::path::PathBuf;

use thiserror::Error;

/// Failures surfaced to the command line. Everything except a budget refusal
/// is an input error.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),

    #[error(transparent)]
    Core(#[from] spindle_core::Error),

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error(
        "refusing to run: estimated {estimate:.3e} work units exceeds the budget of {budget:.3e} \
         (about {seconds:.0} s single-threaded); pass --force or raise --budget"
    )]
    Budget {
        estimate: f64,
        budget: f64,
        seconds: f64,
    },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Budget { .. } => 3,
            _ => 2,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn input(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}
