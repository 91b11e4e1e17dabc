use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// The caller passed inconsistent or invalid arguments.
    #[error("usage error: {0}")]
    Usage(String),

    /// Malformed input data (edge lists, adjacency matrices, config files).
    #[error("input error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    Input { line: Option<usize>, message: String },

    /// A configuration that makes a criterion or estimator undefined.
    #[error("configuration error: {0}")]
    Config(String),

    /// Numerical failure (non-PSD system, solver breakdown).
    #[error("numerical error: {0}")]
    Numerical(String),

    /// Every rectangle cell had zero conditional variance.
    #[error("degenerate test: no cell carries positive conditional variance")]
    DegenerateTest,

    #[error("all {0} restarts failed; first error: {1}")]
    AllRestartsFailed(usize, Box<Error>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn input(line: usize, message: impl Into<String>) -> Self {
        Error::Input {
            line: Some(line),
            message: message.into(),
        }
    }

    pub(crate) fn input_nl(message: impl Into<String>) -> Self {
        Error::Input {
            line: None,
            message: message.into(),
        }
    }

    /// Prefix the message with extra context, keeping the variant.
    pub fn context(self, ctx: impl std::fmt::Display) -> Self {
        match self {
            Error::Numerical(m) => Error::Numerical(format!("{ctx}: {m}")),
            Error::Config(m) => Error::Config(format!("{ctx}: {m}")),
            Error::Usage(m) => Error::Usage(format!("{ctx}: {m}")),
            Error::Domain(m) => Error::Domain(format!("{ctx}: {m}")),
            Error::Input { line, message } => Error::Input {
                line,
                message: format!("{ctx}: {message}"),
            },
            Error::Io(e) => Error::Io(std::io::Error::new(e.kind(), format!("{ctx}: {e}"))),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
