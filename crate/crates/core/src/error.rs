use std::path::PathBuf;

/// Errors produced by the engine.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A value or argument violated an operation's contract.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// Configuration is inconsistent or incomplete.
    #[error("config error: {0}")]
    Config(String),

    /// A data file could not be parsed. Carries the offending line when known.
    #[error("parse error in {path}{}: {msg}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Parse {
        path: PathBuf,
        line: Option<usize>,
        msg: String,
    },

    /// Input data violated a documented invariant (duplicate ids, empty corpus, ...).
    #[error("data error: {0}")]
    Data(String),

    /// A persisted segment is corrupt or has an unsupported version.
    #[error("segment load error: {0}")]
    SegmentLoad(String),

    /// A pipeline step failed; names the step and the underlying cause.
    #[error("step '{step}' failed: {source}")]
    Step {
        step: &'static str,
        #[source]
        source: Box<Error>,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line: Some(line),
            msg: msg.into(),
        }
    }

    pub fn parse_file(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line: None,
            msg: msg.into(),
        }
    }

    pub fn in_step(self, step: &'static str) -> Self {
        Error::Step {
            step,
            source: Box::new(self),
        }
    }

    /// Process exit code for the CLI: 2 config, 3 data, 4 internal.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::InvalidInput(_)
            | Error::Parse { .. }
            | Error::Data(_)
            | Error::SegmentLoad(_) => 3,
            Error::Step { source, .. } => source.exit_code(),
            Error::Io(_) | Error::Json(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
