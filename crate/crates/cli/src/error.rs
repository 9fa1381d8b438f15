use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<cgl_steer::Error> for CliError {
    fn from(e: cgl_steer::Error) -> Self {
        match e {
            cgl_steer::Error::Io(io) => CliError::Io(io),
            other => CliError::Numerical(other.to_string()),
        }
    }
}
