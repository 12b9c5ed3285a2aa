use std::path::PathBuf;

use thiserror::Error;

pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_IO: i32 = 3;
pub const EXIT_SATURATION: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: line {line}: malformed row: {reason}")]
    MalformedRow {
        path: PathBuf,
        line: u64,
        reason: String,
    },

    #[error("{path}: line {line}: total {stated} does not match the sum of counts {computed}")]
    TotalMismatch {
        path: PathBuf,
        line: u64,
        stated: u64,
        computed: u64,
    },

    #[error("{path}: missing column `{column}`")]
    MissingColumn { path: PathBuf, column: String },

    #[error("{path}: {source}")]
    Data {
        path: PathBuf,
        #[source]
        source: ddpcr_core::Error,
    },

    #[error(transparent)]
    Core(#[from] ddpcr_core::Error),

    #[error("invalid request: {0}")]
    InvalidRequest(String),

    #[error("saturation with --strict-bound: {0}")]
    Saturated(String),

    #[error("writing output: {0}")]
    Output(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io { .. } | CliError::Output(_) => EXIT_IO,
            CliError::Saturated(_) => EXIT_SATURATION,
            _ => EXIT_VALIDATION,
        }
    }
}
