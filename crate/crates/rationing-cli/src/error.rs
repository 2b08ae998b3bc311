use std::fmt;

/// Failures that end a command, grouped by the exit status they map to.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed configuration, invalid parameters.
    Usage(String),
    /// The model rejected the input or a numerical routine broke down.
    Model(rationing::Error),
    Io(std::io::Error),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    /// 2 for anything the caller can fix by changing the input, 1 for
    /// numerical breakdowns that make the requested check fail.
    pub fn exit_code(&self) -> i32 {
        use rationing::Error as E;
        match self {
            CliError::Usage(_) | CliError::Io(_) => 2,
            CliError::Model(e) => match e {
                E::NumericalOverflow { .. }
                | E::SingularSystem { .. }
                | E::InconsistentTermination { .. }
                | E::DegenerateRoot { .. }
                | E::CycleWithoutImprovement => 1,
                _ => 2,
            },
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Model(e) => write!(f, "model error: {e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<rationing::Error> for CliError {
    fn from(e: rationing::Error) -> Self {
        CliError::Model(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
