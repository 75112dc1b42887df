use std::fmt;

use girsanov_core::Error as CoreError;

/// Everything that stops a run, with the process exit code it maps to.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{}", config_message(*.line, .message))]
    Config { line: Option<usize>, message: String },
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{0}")]
    Io(String),
}

fn config_message(line: Option<usize>, message: &str) -> String {
    match line {
        Some(l) => format!("line {l}: {message}"),
        None => message.to_string(),
    }
}

pub mod exit {
    pub const SUCCESS: i32 = 0;
    pub const IO: i32 = 1;
    pub const INCONCLUSIVE: i32 = 2;
    pub const CONFIG: i32 = 3;
    pub const NUMERIC: i32 = 4;
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config { .. } => exit::CONFIG,
            CliError::Io(_) => exit::IO,
            CliError::Core(e) => match e {
                CoreError::Config(_) | CoreError::UnknownScenario(_) => exit::CONFIG,
                CoreError::Estimator(_) => exit::INCONCLUSIVE,
                CoreError::NotSymmetric { .. }
                | CoreError::NotPsd { .. }
                | CoreError::NumericDomain { .. }
                | CoreError::NumericFailureRate { .. } => exit::NUMERIC,
            },
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// Short label for an exit code, used in messages.
pub struct ExitLabel(pub i32);

impl fmt::Display for ExitLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self.0 {
            exit::SUCCESS => "success",
            exit::IO => "i/o error",
            exit::INCONCLUSIVE => "inconclusive",
            exit::CONFIG => "invalid configuration",
            exit::NUMERIC => "numeric failure",
            _ => "error",
        };
        f.write_str(s)
    }
}
