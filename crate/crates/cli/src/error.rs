use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Numerical(#[from] nldiff::Error),

    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },

    #[error("{failed} acceptance criteria failed")]
    Acceptance { failed: usize },
}

impl CliError {
    /// Process exit status: 1 for configuration and I/O problems, 2 for a
    /// non-finite state, 3 for failed acceptance criteria.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(nldiff::Error::NonfiniteState { .. }) => 2,
            CliError::Acceptance { .. } => 3,
            _ => 1,
        }
    }
}
