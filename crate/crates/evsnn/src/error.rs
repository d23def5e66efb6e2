//! Application-level errors with a fixed exit-code table.
//!
//! Every failure surfaces to the user as a single stderr line of the form
//! `evsnn: error[<kind>] <message>`, and the process exits with the code
//! assigned to that kind:
//!
//! | code | kind       | meaning                                          |
//! |------|------------|--------------------------------------------------|
//! | 0    | —          | success                                          |
//! | 1    | other      | unclassified internal failure                    |
//! | 2    | usage      | bad command line (unknown flag, missing value)   |
//! | 3    | io         | missing file or failed read/write                |
//! | 4    | parse      | malformed file content (byte/line position given)|
//! | 5    | validation | well-formed input violating a domain invariant   |
//! | 6    | config     | inconsistent or out-of-range configuration       |
//! | 7    | diverged   | training produced non-finite numbers             |

use std::path::PathBuf;

use evsnn_core::CoreError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AppError {
    #[error("{0}")]
    Usage(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// `at` locates the problem: a byte offset for binary files, a line
    /// number for text files (the message says which).
    #[error("{path}: {message} ({unit} {at})")]
    Parse {
        path: PathBuf,
        at: u64,
        unit: &'static str,
        message: String,
    },

    #[error("{0}")]
    Validation(String),

    #[error("{0}")]
    Config(String),

    #[error("training diverged at epoch {epoch}, batch {batch}")]
    Diverged { epoch: usize, batch: usize },

    #[error("{0}")]
    Other(String),
}

impl AppError {
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Usage(_) => 2,
            AppError::Io { .. } => 3,
            AppError::Parse { .. } => 4,
            AppError::Validation(_) => 5,
            AppError::Config(_) => 6,
            AppError::Diverged { .. } => 7,
            AppError::Other(_) => 1,
        }
    }

    /// Short kind tag used in the one-line stderr report.
    pub fn kind(&self) -> &'static str {
        match self {
            AppError::Usage(_) => "usage",
            AppError::Io { .. } => "io",
            AppError::Parse { .. } => "parse",
            AppError::Validation(_) => "validation",
            AppError::Config(_) => "config",
            AppError::Diverged { .. } => "diverged",
            AppError::Other(_) => "other",
        }
    }

    /// The single machine-parsable stderr line for this error.
    pub fn report_line(&self) -> String {
        // Newlines inside source messages would break one-line parsing.
        let msg = self.to_string().replace('\n', " ");
        format!("evsnn: error[{}] {}", self.kind(), msg)
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> AppError {
        AppError::Io {
            path: path.into(),
            source,
        }
    }

    pub fn parse_at_byte(path: impl Into<PathBuf>, offset: u64, message: impl Into<String>) -> AppError {
        AppError::Parse {
            path: path.into(),
            at: offset,
            unit: "byte",
            message: message.into(),
        }
    }

    pub fn parse_at_line(path: impl Into<PathBuf>, line: u64, message: impl Into<String>) -> AppError {
        AppError::Parse {
            path: path.into(),
            at: line,
            unit: "line",
            message: message.into(),
        }
    }
}

impl From<CoreError> for AppError {
    fn from(e: CoreError) -> AppError {
        match e {
            CoreError::Diverged { epoch, batch } => AppError::Diverged { epoch, batch },
            CoreError::InvalidConfig(msg) => AppError::Config(msg.to_string()),
            other => AppError::Validation(other.to_string()),
        }
    }
}

pub type Result<T> = std::result::Result<T, AppError>;
