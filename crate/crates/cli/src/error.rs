use std::fmt;

/// Usage or validation failure.
pub const USAGE: u8 = 2;
/// Reading or writing a file failed.
pub const IO: u8 = 3;
/// Too many simulation replications failed.
pub const QUALITY: u8 = 4;

/// An error carrying the process exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub source: anyhow::Error,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:#}", self.source)
    }
}

pub fn usage(msg: impl fmt::Display) -> CliError {
    CliError {
        code: USAGE,
        source: anyhow::anyhow!("{msg}"),
    }
}

pub trait ExitCodeExt<T> {
    fn or_usage(self) -> Result<T, CliError>;
    fn or_io(self) -> Result<T, CliError>;
}

impl<T, E: Into<anyhow::Error>> ExitCodeExt<T> for Result<T, E> {
    fn or_usage(self) -> Result<T, CliError> {
        self.map_err(|e| CliError {
            code: USAGE,
            source: e.into(),
        })
    }

    fn or_io(self) -> Result<T, CliError> {
        self.map_err(|e| CliError {
            code: IO,
            source: e.into(),
        })
    }
}
