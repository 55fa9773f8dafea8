use std::fmt;

/// Failure of one command, carrying the process exit code.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Io(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Io(m) => write!(f, "{m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<ctsdf::Error> for CliError {
    fn from(e: ctsdf::Error) -> Self {
        use ctsdf::Error as E;
        match e {
            E::Io { .. } | E::Header(_) | E::UnsupportedElementType(_) | E::PayloadSize { .. } => {
                CliError::Io(e.to_string())
            }
            e if e.is_numerical() => CliError::Numerical(e.to_string()),
            e => CliError::Usage(e.to_string()),
        }
    }
}

pub fn io_error(path: &std::path::Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("i/o error on {}: {e}", path.display()))
}
