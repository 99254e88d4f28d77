use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The experiment description was rejected before anything ran.
    #[error("{0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] ep_aloha::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub(crate) fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }

    /// Short machine-readable category.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Io { .. } => "io",
            CliError::Model(_) => "model",
            CliError::Csv(_) => "csv",
        }
    }

    /// Process exit code: 2 for rejected input, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Model(_) => 2,
            CliError::Io { .. } | CliError::Csv(_) => 1,
        }
    }

    /// One-line JSON description, e.g. `{"error":"config","message":"..."}`.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string() }).to_string()
    }
}
