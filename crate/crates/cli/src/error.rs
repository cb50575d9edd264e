use std::fmt;
use std::process::ExitCode;

/// Failure classes of the command line, one exit code each.
///
/// | code | meaning |
/// |------|---------|
/// | 0 | success |
/// | 2 | usage or configuration error; nothing was written |
/// | 3 | a solver failed; nothing was written |
/// | 4 | reading or writing files failed, or an input file is corrupt |
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Solver(String),
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Config(_) => 2,
            CliError::Solver(_) => 3,
            CliError::Io(_) => 4,
        })
    }

    pub fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    pub fn io(context: impl fmt::Display, e: impl fmt::Display) -> Self {
        CliError::Io(format!("{context}: {e}"))
    }

    /// Maps a library error raised while solving. File format errors keep
    /// their IO classification.
    pub fn solver(context: impl fmt::Display, e: regap::Error) -> Self {
        match e {
            regap::Error::Io(_) | regap::Error::Format(_) => CliError::io(context, e),
            other => CliError::Solver(format!("{context}: {other}")),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Solver(m) => write!(f, "solver error: {m}"),
            CliError::Io(m) => write!(f, "io error: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

pub type CliResult<T> = Result<T, CliError>;
