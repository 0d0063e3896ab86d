use thiserror::Error;

/// Process exit codes.
pub mod exit {
    pub const OK: i32 = 0;
    pub const BOUND_VIOLATION: i32 = 1;
    pub const INPUT_ERROR: i32 = 2;
    pub const UNSUPPORTED: i32 = 3;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },

    #[error("cannot access {path}: {message}")]
    Io { path: String, message: String },

    #[error("state {index} is invalid: {message}")]
    InvalidState { index: usize, message: String },

    #[error("invalid arguments: {0}")]
    Usage(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error(transparent)]
    Core(#[from] pgm_core::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Unsupported(_) | CliError::Core(pgm_core::Error::Unsupported(_)) => {
                exit::UNSUPPORTED
            }
            _ => exit::INPUT_ERROR,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Parse { .. } => "parse",
            CliError::Io { .. } => "io",
            CliError::InvalidState { .. } => "invalid_state",
            CliError::Usage(_) => "usage",
            CliError::Unsupported(_) => "unsupported",
            CliError::Core(pgm_core::Error::Unsupported(_)) => "unsupported",
            CliError::Core(pgm_core::Error::ZeroEpsilon) => "zero_epsilon",
            CliError::Core(_) => "invalid_parameter",
        }
    }
}
