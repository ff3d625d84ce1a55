use std::path::PathBuf;

/// Errors surfaced by the I/O layer and the command-line tool.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{path}:{line}: {message}")]
    Config { path: PathBuf, line: usize, message: String },

    #[error("configuration: {0}")]
    Setting(String),

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("data: {0}")]
    Data(String),

    #[error(transparent)]
    Core(#[from] taskdict_core::Error),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        CliError::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Process exit code: 2 configuration, 3 data or I/O, 4 divergence,
    /// 1 anything else.
    pub fn exit_code(&self) -> i32 {
        use taskdict_core::Error as E;
        match self {
            CliError::Config { .. } | CliError::Setting(_) => 2,
            CliError::Format { .. } | CliError::Io { .. } | CliError::Data(_) => 3,
            CliError::Core(E::Diverged { .. }) => 4,
            CliError::Core(E::InvalidParameter(_) | E::SingularNormalEquations | E::MissingTransform) => 2,
            CliError::Core(
                E::Shape { .. }
                | E::NonFinite(_)
                | E::InvalidLabel(_)
                | E::InsufficientData(_)
                | E::Empty(_)
                | E::TaskMismatch(_)
                | E::ImageTooSmall { .. }
                | E::Uncovered { .. },
            ) => 3,
            CliError::Core(_) => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
