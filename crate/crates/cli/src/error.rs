use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: {0}")]
    Config(String),
    #[error("schema error{}: {message}", record.map(|r| format!(" at record {r}")).unwrap_or_default())]
    Schema { record: Option<usize>, message: String },
    #[error("numerical: {0}")]
    Numerical(#[from] wigner_pnr::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn schema(record: Option<usize>, message: impl Into<String>) -> Self {
        Self::Schema {
            record,
            message: message.into(),
        }
    }

    /// 1 for configuration and schema problems, 2 for numerical failures,
    /// 3 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Schema { .. } => 1,
            Self::Numerical(_) => 2,
            Self::Io { .. } => 3,
        }
    }
}
