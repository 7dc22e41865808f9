use std::io;
use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    #[error("config file line {line}: expected `key=value`, found `{text}`")]
    Syntax { line: usize, text: String },

    #[error("unknown config key `{0}`")]
    UnknownKey(String),

    #[error("override `{0}` is missing its value")]
    MissingValue(String),

    #[error("expected `--key value`, found `{0}`")]
    StrayArgument(String),

    #[error("unknown command `{0}`")]
    UnknownCommand(String),

    #[error("invalid value for `{field}`: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    pub fn invalid(field: &str, message: impl Into<String>) -> Self {
        ConfigError::Invalid {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

/// Everything that can stop a run, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{context}: {source}")]
    Input {
        context: String,
        #[source]
        source: manicov::Error,
    },

    #[error("numerical failure: {0}")]
    Numerical(#[source] manicov::Error),

    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    /// 2 for configuration and output-location problems, 3 for bad input
    /// data, 4 for numerical failures.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Output { .. } => 2,
            CliError::Input { .. } => 3,
            CliError::Numerical(_) => 4,
        }
    }

    pub fn input(context: impl Into<String>, source: manicov::Error) -> Self {
        CliError::Input {
            context: context.into(),
            source,
        }
    }
}

fn is_numerical(e: &manicov::Error) -> bool {
    use manicov::Error::*;
    matches!(
        e.root(),
        NoConvergence { .. } | Lapack { .. } | SingularWeights { .. } | RankExceeded { .. }
    )
}

impl From<manicov::Error> for CliError {
    fn from(e: manicov::Error) -> Self {
        if is_numerical(&e) {
            CliError::Numerical(e)
        } else {
            CliError::input("invalid data", e)
        }
    }
}
