use std::fmt;

use crate::feature::Layout;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse failure class, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Io,
    Schema,
    Config,
    Numeric,
}

impl ErrorCategory {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Io => 1,
            ErrorCategory::Schema => 2,
            ErrorCategory::Config => 3,
            ErrorCategory::Numeric => 4,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Io => "io",
            ErrorCategory::Schema => "schema",
            ErrorCategory::Config => "config",
            ErrorCategory::Numeric => "numeric",
        }
    }
}

impl fmt::Display for ErrorCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },

    #[error("invalid record {frame_id}: {reason}")]
    Validation { frame_id: String, reason: String },

    #[error("unsupported checkpoint version {found} (this build reads version {expected})")]
    UnsupportedVersion { found: u64, expected: u64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("layout mismatch: expected {expected}, got {found}")]
    LayoutMismatch { expected: Layout, found: Layout },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error(
        "dataset must contain both classes (found {positives} positive, {negatives} negative)"
    )]
    SingleClass { positives: usize, negatives: usize },
}

impl Error {
    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub(crate) fn validation(frame_id: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            frame_id: frame_id.into(),
            reason: reason.into(),
        }
    }

    pub(crate) fn from_json(err: serde_json::Error) -> Self {
        if err.is_io() {
            return Error::Io {
                path: "<stream>".into(),
                source: err.into(),
            };
        }
        Error::Parse {
            line: err.line(),
            column: err.column(),
            message: err.to_string(),
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Io { .. } => ErrorCategory::Io,
            Error::Parse { .. } | Error::Validation { .. } | Error::UnsupportedVersion { .. } => {
                ErrorCategory::Schema
            }
            Error::Config(_) | Error::Empty(_) | Error::SingleClass { .. } => ErrorCategory::Config,
            Error::LayoutMismatch { .. } | Error::Shape(_) | Error::NonFinite(_) => {
                ErrorCategory::Numeric
            }
        }
    }
}
