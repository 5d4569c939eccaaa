//! CLI error taxonomy mapped onto exit codes.

use std::fmt;

/// Exit codes: 0 success, 2 config error, 3 runtime error, 4 partial sweep
/// failure.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    /// Invalid config/spec documents (parse failures, bad ranges, unknown
    /// fields).
    Config(String),
    /// Failures while executing a valid config: missing referenced files
    /// (profiles, recorded traces), malformed data files, IO errors.
    Runtime(String),
    /// Some sweep/ablation rows failed; the rest were written.
    Partial(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
            CliError::Partial(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(msg) => write!(f, "config error: {msg}"),
            CliError::Runtime(msg) => write!(f, "runtime error: {msg}"),
            CliError::Partial(msg) => write!(f, "partial failure: {msg}"),
        }
    }
}

impl std::error::Error for CliError {}

/// Core configuration errors stay config errors; everything else surfaces as
/// a runtime failure.
pub fn from_core(err: softcap_core::Error) -> CliError {
    match err {
        softcap_core::Error::Config(msg) => CliError::Config(msg),
        other => CliError::Runtime(other.to_string()),
    }
}
