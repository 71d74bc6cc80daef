use std::io;
use std::path::{Path, PathBuf};

use qrng_core::chsh::ScoreError;
use qrng_core::{EntropyError, ExtractError, TrialError};
use qrng_core::spdc::SpdcError;
use thiserror::Error;

/// Process exit codes. Usage errors from argument parsing exit with 2.
pub mod exit {
    pub const OK: i32 = 0;
    pub const CONFIG: i32 = 1;
    pub const USAGE: i32 = 2;
    pub const ABORT: i32 = 10;
    pub const INSUFFICIENT_DATA: i32 = 11;
    pub const IO: i32 = 12;
    pub const CAPACITY: i32 = 13;
    pub const NOTHING_TO_EXTRACT: i32 = 14;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
    #[error("{0}")]
    Capacity(String),
    #[error("nothing to extract: certified min-entropy {h_min:.3} bits does not exceed t_e = {t_e}")]
    NothingToExtract { h_min: f64, t_e: u32 },
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Failed(_) => exit::CONFIG,
            CliError::InsufficientData(_) => exit::INSUFFICIENT_DATA,
            CliError::Io { .. } => exit::IO,
            CliError::Capacity(_) => exit::CAPACITY,
            CliError::NothingToExtract { .. } => exit::NOTHING_TO_EXTRACT,
        }
    }

    pub fn io(path: &Path) -> impl FnOnce(io::Error) -> CliError + '_ {
        move |source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// Attributes a library error to the file it came from.
    pub fn extract(path: &Path, e: ExtractError) -> CliError {
        match e {
            ExtractError::Io(source) => CliError::Io {
                path: path.to_path_buf(),
                source,
            },
            ExtractError::Trials(t) => CliError::trials(path, t),
            ExtractError::Capacity { .. } | ExtractError::Precision { .. } => CliError::Capacity(e.to_string()),
            ExtractError::Dimension { .. } | ExtractError::EmptyInput => CliError::InsufficientData(e.to_string()),
            other => CliError::Failed(other.to_string()),
        }
    }

    pub fn trials(path: &Path, e: TrialError) -> CliError {
        match e {
            TrialError::Io(source) => CliError::Io {
                path: path.to_path_buf(),
                source,
            },
            TrialError::Truncated { .. } => CliError::InsufficientData(format!("{}: {e}", path.display())),
            other => CliError::Failed(format!("{}: {other}", path.display())),
        }
    }
}

impl From<ScoreError> for CliError {
    fn from(e: ScoreError) -> Self {
        CliError::InsufficientData(e.to_string())
    }
}

impl From<EntropyError> for CliError {
    fn from(e: EntropyError) -> Self {
        CliError::Config(e.to_string())
    }
}

impl From<SpdcError> for CliError {
    fn from(e: SpdcError) -> Self {
        CliError::Config(e.to_string())
    }
}
