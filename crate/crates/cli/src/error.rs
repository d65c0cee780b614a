use std::fmt;

use crate::config::ConfigError;

#[derive(Debug)]
pub enum CliError {
    /// Unparsable or invalid configuration.
    Config(String),
    /// Malformed input file or report, or a dangling reference.
    Input(String),
    BlowUp(String),
    /// An acceptance predicate failed under `--check`.
    Check(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::BlowUp(_) => 3,
            CliError::Check(_) => 4,
            CliError::Runtime(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Input(m) => write!(f, "input error: {m}"),
            CliError::BlowUp(m) => write!(f, "blow-up: {m}"),
            CliError::Check(m) => write!(f, "check failed: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<snls_core::Error> for CliError {
    fn from(e: snls_core::Error) -> Self {
        use snls_core::Error as E;
        let msg = e.to_string();
        match e {
            E::BlowUp { .. } => CliError::BlowUp(msg),
            E::InvalidParameter(_)
            | E::UnsupportedDimension(_)
            | E::GridTooSmall { .. }
            | E::HorizonTooLarge { .. }
            | E::BudgetExceeded { .. }
            | E::TooFewRuns { .. } => CliError::Config(msg),
            E::Format(_) | E::Json(_) => CliError::Input(msg),
            _ => CliError::Runtime(msg),
        }
    }
}
