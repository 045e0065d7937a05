use std::fmt;
use std::path::Path;

use thiserror::Error;

/// Failure of one command. Every variant carries the file it concerns.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: parse error: {message}")]
    Parse { path: String, message: String },
    #[error("{path}: {message}")]
    Shape { path: String, message: String },
    #[error("{path}: {message}")]
    Capacity { path: String, message: String },
    #[error("{path}: {message}")]
    Invalid { path: String, message: String },
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("verification failed: {0}")]
    Mismatch(String),
}

impl CliError {
    /// Process exit status: 2 parse, 3 shape, 4 capacity, 1 anything else.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse { .. } => 2,
            CliError::Shape { .. } => 3,
            CliError::Capacity { .. } => 4,
            _ => 1,
        }
    }

    pub fn parse(path: impl AsRef<Path>, message: impl fmt::Display) -> Self {
        CliError::Parse {
            path: show(path),
            message: message.to_string(),
        }
    }

    pub fn shape(path: impl AsRef<Path>, message: impl fmt::Display) -> Self {
        CliError::Shape {
            path: show(path),
            message: message.to_string(),
        }
    }

    pub fn invalid(path: impl AsRef<Path>, message: impl fmt::Display) -> Self {
        CliError::Invalid {
            path: show(path),
            message: message.to_string(),
        }
    }

    pub fn io(path: impl AsRef<Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: show(path),
            source,
        }
    }

    /// Attaches `path` to a pipeline error, keeping its class.
    pub fn core(path: impl AsRef<Path>, e: dbpim_core::Error) -> Self {
        use dbpim_core::Error as E;
        let path = show(path);
        let message = e.to_string();
        match e {
            E::Shape { .. } => CliError::Shape { path, message },
            E::Capacity { .. } => CliError::Capacity { path, message },
            _ => CliError::Invalid { path, message },
        }
    }

    /// serde_json failure with the offending line quoted.
    pub fn json(path: impl AsRef<Path>, text: &str, e: &serde_json::Error) -> Self {
        let mut message = e.to_string();
        if e.line() > 0 {
            if let Some(line) = text.lines().nth(e.line() - 1) {
                let line = line.trim();
                let snippet: String = line.chars().take(80).collect();
                let more = if line.chars().count() > 80 { " ..." } else { "" };
                message = format!("{message}\n  | {snippet}{more}");
            }
        }
        CliError::parse(path, message)
    }
}

fn show(path: impl AsRef<Path>) -> String {
    path.as_ref().display().to_string()
}

pub type Result<T> = std::result::Result<T, CliError>;
