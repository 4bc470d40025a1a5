use std::path::PathBuf;

use thiserror::Error;

/// Failure categories, each with its own exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Config,
    Numerical,
    Io,
    NotConverged,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Config => 2,
            Category::Numerical => 3,
            Category::Io => 4,
            Category::NotConverged => 5,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::Config => "config",
            Category::Numerical => "numerical",
            Category::Io => "io",
            Category::NotConverged => "not_converged",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}", config_message(.line, .key, .message))]
    Config {
        line: Option<usize>,
        key: Option<String>,
        message: String,
    },

    #[error(transparent)]
    Numerical(#[from] perisolve_core::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    NotConverged(String),
}

fn config_message(line: &Option<usize>, key: &Option<String>, message: &str) -> String {
    match (line, key) {
        (Some(l), Some(k)) => format!("line {l}: key `{k}`: {message}"),
        (None, Some(k)) => format!("key `{k}`: {message}"),
        (Some(l), None) => format!("line {l}: {message}"),
        (None, None) => message.to_string(),
    }
}

impl CliError {
    pub fn category(&self) -> Category {
        match self {
            CliError::Config { .. } => Category::Config,
            CliError::Numerical(perisolve_core::Error::InvalidProblem(_))
            | CliError::Numerical(perisolve_core::Error::InvalidGridSize(_))
            | CliError::Numerical(perisolve_core::Error::NonPowerOfTwo(_))
            | CliError::Numerical(perisolve_core::Error::InvalidDimension(_))
            | CliError::Numerical(perisolve_core::Error::InvalidSpacing { .. })
            | CliError::Numerical(perisolve_core::Error::RadiusTooLarge { .. }) => Category::Config,
            CliError::Numerical(_) => Category::Numerical,
            CliError::Io { .. } => Category::Io,
            CliError::NotConverged(_) => Category::NotConverged,
        }
    }

    pub fn config(line: Option<usize>, key: Option<&str>, message: impl Into<String>) -> Self {
        CliError::Config {
            line,
            key: key.map(str::to_string),
            message: message.into(),
        }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.into(),
            source,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
