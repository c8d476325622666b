use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error:\n  {}", .0.join("\n  "))]
    Config(Vec<String>),
    #[error(transparent)]
    Run(#[from] mptaylor::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
}

impl CliError {
    /// 1 for configuration problems, 2 for everything that fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 1,
            _ => 2,
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
