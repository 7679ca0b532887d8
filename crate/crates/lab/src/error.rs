use std::fmt;

/// Failure of a subcommand, carrying its process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Malformed config, flags or input files: exit 2.
    Config(String),
    /// An SCF run stopped before converging: exit 3. Outputs are written.
    Unconverged(String),
    /// Solver or output failure: exit 4.
    Solver(String),
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn solver(msg: impl Into<String>) -> Self {
        CliError::Solver(msg.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Unconverged(_) => 3,
            CliError::Solver(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Unconverged(m) => write!(f, "not converged: {m}"),
            CliError::Solver(m) => write!(f, "solver error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<dfrt_core::Error> for CliError {
    fn from(e: dfrt_core::Error) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Solver(format!("io: {e}"))
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Solver(format!("csv: {e}"))
    }
}
