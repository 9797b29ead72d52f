use std::path::PathBuf;

/// Errors produced anywhere in the pipeline.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("validation error: {0}")]
    Validation(String),

    #[error("format error: {0}")]
    Format(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("unsupported format version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },

    #[error("length error: {0}")]
    Length(String),

    #[error("checksum mismatch in block `{0}`")]
    Checksum(String),

    #[error("training error: {0}")]
    Training(String),

    #[error("state error: {0}")]
    State(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }

    pub fn shape(msg: impl Into<String>) -> Self {
        Error::Shape(msg.into())
    }

    pub fn format(msg: impl Into<String>) -> Self {
        Error::Format(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the command-line tool.
    ///
    /// 2 validation, 3 format, 4 training, 5 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain(_) | Error::Validation(_) => 2,
            Error::Format(_)
            | Error::Parse { .. }
            | Error::Version { .. }
            | Error::Length(_)
            | Error::Checksum(_)
            | Error::Io { .. } => 3,
            Error::Training(_) => 4,
            Error::Shape(_) | Error::State(_) => 5,
        }
    }

    /// Short machine-parsable tag used on the CLI's error line.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain(_) => "domain",
            Error::Shape(_) => "shape",
            Error::Validation(_) => "validation",
            Error::Format(_) => "format",
            Error::Parse { .. } => "parse",
            Error::Version { .. } => "version",
            Error::Length(_) => "length",
            Error::Checksum(_) => "checksum",
            Error::Training(_) => "training",
            Error::State(_) => "state",
            Error::Io { .. } => "io",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
