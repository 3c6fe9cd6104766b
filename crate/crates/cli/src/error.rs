use std::fmt;
use std::process::ExitCode;

/// Failure of a subcommand, classified by exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad or inconsistent input, detected before anything is written.
    Invalid { field: String, reason: String },
    Core(sensornet::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        CliError::Invalid {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Invalid { .. } => ExitCode::from(2),
            CliError::Core(e) if e.is_numerical() => ExitCode::from(3),
            CliError::Core(_) => ExitCode::from(2),
            CliError::Io(_) => ExitCode::from(1),
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Invalid { field, reason } => write!(f, "invalid --{field}: {reason}"),
            CliError::Core(e) if e.is_numerical() => write!(f, "numerical error: {e}"),
            CliError::Core(e) => write!(f, "invalid input: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<sensornet::Error> for CliError {
    fn from(e: sensornet::Error) -> Self {
        CliError::Core(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}
