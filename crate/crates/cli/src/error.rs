use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("solver failed: {0}")]
    Solver(String),
    #[error("{failed} of {total} runs failed")]
    Partial { failed: usize, total: usize },
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Partial { .. } => 1,
            CliError::Usage(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Solver(_) => 4,
        }
    }
}

impl From<noise_reversal::Error> for CliError {
    fn from(e: noise_reversal::Error) -> Self {
        use noise_reversal::Error as E;
        match e {
            E::AllRestartsAborted(_) | E::NumericOverflow(_) => CliError::Solver(e.to_string()),
            other => CliError::Usage(other.to_string()),
        }
    }
}
