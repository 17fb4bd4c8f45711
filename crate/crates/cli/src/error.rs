use std::fmt;

/// Every failure the CLI reports, with its exit status.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Io(String),
    Generation(String),
    Assertion(String),
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Usage(_) => "usage",
            CliError::Config(_) => "config",
            CliError::Io(_) => "io",
            CliError::Generation(_) => "generation",
            CliError::Assertion(_) => "assertion",
        }
    }

    pub fn exit_status(&self) -> u8 {
        match self {
            CliError::Assertion(_) => 1,
            CliError::Usage(_) | CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Generation(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Usage(m)
            | CliError::Config(m)
            | CliError::Io(m)
            | CliError::Generation(m)
            | CliError::Assertion(m) => m,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flat: Vec<&str> = self.message().lines().map(str::trim).filter(|l| !l.is_empty()).collect();
        write!(f, "error[{}]: {}", self.code(), flat.join("; "))
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

pub type CliResult<T> = Result<T, CliError>;
