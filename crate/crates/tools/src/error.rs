use std::path::{Path, PathBuf};

use penrose_core::Error as CoreError;

/// Failure of a command, carrying its process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    Parse { path: PathBuf, line: usize, message: String },
    #[error("configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] CoreError),
    /// Per-row failures of a batch command; `domain` is set when at least one
    /// row was rejected by the transform rather than the parser.
    #[error("{failed} of {total} rows failed")]
    Rows { failed: usize, total: usize, domain: bool },
    /// Blow-up during a run whose partial output was still written.
    #[error("non-finite value encountered at t = {0}")]
    NonFinite(f64),
    #[error("verdict: {0}")]
    Verdict(String),
}

pub type Result<T> = std::result::Result<T, CliError>;

pub mod exit {
    pub const OK: u8 = 0;
    pub const IO: u8 = 1;
    pub const PARSE: u8 = 2;
    pub const DOMAIN: u8 = 3;
    pub const STABILITY: u8 = 4;
    pub const NAN: u8 = 5;
    pub const COVERAGE: u8 = 6;
    pub const VERDICT: u8 = 7;
}

impl CliError {
    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        Self::Io { path: path.as_ref().to_path_buf(), source }
    }

    pub fn parse(path: impl AsRef<Path>, line: usize, message: impl Into<String>) -> Self {
        Self::Parse { path: path.as_ref().to_path_buf(), line, message: message.into() }
    }

    pub fn csv(path: impl AsRef<Path>, err: csv::Error) -> Self {
        let line = err.position().map_or(0, |p| p.line() as usize);
        match err.into_kind() {
            csv::ErrorKind::Io(e) => Self::io(path, e),
            other => Self::parse(path, line, format!("{other:?}")),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Io { .. } => exit::IO,
            CliError::Parse { .. } | CliError::Config(_) => exit::PARSE,
            CliError::Rows { domain, .. } => {
                if *domain {
                    exit::DOMAIN
                } else {
                    exit::PARSE
                }
            }
            CliError::NonFinite(_) => exit::NAN,
            CliError::Verdict(_) => exit::VERDICT,
            CliError::Core(e) => match e {
                CoreError::Domain(_) | CoreError::Convergence(_) => exit::DOMAIN,
                CoreError::Config(_) | CoreError::Order { .. } => exit::PARSE,
                CoreError::Stability(_) => exit::STABILITY,
                CoreError::NonFinite { .. } => exit::NAN,
                CoreError::Mask { .. } | CoreError::Range { .. } | CoreError::Coverage(_) => exit::COVERAGE,
                CoreError::Fit(_) => exit::VERDICT,
            },
        }
    }
}
