use rhm_core::RhmError;
use rhm_nn::NnError;
use serde::Serialize;
use thiserror::Error;

/// Failures of the experiment runner, split by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid flags, config file or parameters (exit code 2).
    #[error("{0}")]
    Config(String),
    /// A pipeline failed while running (exit code 3).
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    /// One-line JSON for standard error.
    pub fn to_json(&self) -> String {
        #[derive(Serialize)]
        struct Out<'a> {
            error: &'a str,
            kind: &'a str,
            code: i32,
        }
        let (kind, msg) = match self {
            CliError::Config(m) => ("config", m),
            CliError::Runtime(m) => ("runtime", m),
        };
        serde_json::to_string(&Out { error: msg, kind, code: self.exit_code() }).expect("plain strings")
    }
}

impl From<RhmError> for CliError {
    fn from(e: RhmError) -> Self {
        match e {
            RhmError::InvalidParams(_) | RhmError::Parse { .. } => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        match e {
            NnError::Core(c) => c.into(),
            NnError::Architecture(_) | NnError::Checkpoint(_) => CliError::Config(e.to_string()),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}
