use std::path::Path;

use thiserror::Error;

/// Problems in a configuration or manifest file.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    #[error("line {line}: unknown section `[{name}]`")]
    UnknownSection { line: usize, name: String },

    #[error("line {line}: unknown key `{key}` in section `[{section}]`")]
    UnknownKey { line: usize, section: String, key: String },

    #[error("line {line}: key `{key}`: {msg}")]
    Value { line: usize, key: String, msg: String },

    #[error("missing key `{key}` in section `[{section}]`")]
    Missing { section: String, key: String },
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Core(#[from] vqsac::Error),

    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },

    #[error("{path}: {msg}")]
    Data { path: String, msg: String },

    #[error("no calibrated gains at {0}; run `vqsac calibrate --out <dir>` first")]
    MissingCalibration(String),

    #[error("{0}")]
    Context(String),
}

impl HarnessError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.display().to_string(), source }
    }

    pub fn data(path: &Path, msg: impl Into<String>) -> Self {
        HarnessError::Data { path: path.display().to_string(), msg: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
