use thiserror::Error;

/// Failure classes of the command line, each with its own exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(#[from] thouless_lab::Error),
    #[error("output error: {0}")]
    Output(String),
    #[error("{0} check(s) failed")]
    Check(usize),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Check(_) => 1,
            Self::Usage(_) | Self::Config(_) | Self::Output(_) => 2,
            Self::Numerical(_) => 3,
        }
    }
}
