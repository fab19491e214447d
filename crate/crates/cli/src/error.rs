use std::fmt;

/// Command failures grouped by exit code: configuration problems exit 2,
/// I/O and malformed-input problems exit 3, cross-file consistency
/// violations exit 4.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Io(String),
    Consistency(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
            CliError::Consistency(_) => 4,
        }
    }

    pub fn io(context: &str, err: impl fmt::Display) -> CliError {
        CliError::Io(format!("{context}: {err}"))
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Consistency(m) => write!(f, "consistency error: {m}"),
        }
    }
}
