use std::fmt;

/// Runner-level failures, each mapped to a distinct exit code above 2.
#[derive(Debug)]
pub enum CliError {
    /// Malformed or inconsistent configuration (exit 3).
    Config(String),
    /// The wall-clock guard fired (exit 4).
    BudgetExceeded { limit_secs: u64 },
    /// Filesystem trouble writing or reading (exit 5).
    Io(String),
    /// A check failed to execute at all (exit 6).
    Execution(String),
}

impl CliError {
    pub fn from_core(e: irfs::Error) -> Self {
        CliError::Execution(e.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 3,
            CliError::BudgetExceeded { .. } => 4,
            CliError::Io(_) => 5,
            CliError::Execution(_) => 6,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "configuration error: {msg}"),
            CliError::BudgetExceeded { limit_secs } => {
                write!(f, "wall-clock budget of {limit_secs}s exceeded")
            }
            CliError::Io(msg) => write!(f, "i/o error: {msg}"),
            CliError::Execution(msg) => write!(f, "check execution failed: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;
