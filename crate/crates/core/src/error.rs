use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dataset contains no replicates")]
    EmptyDataset,

    #[error("replicate `{replicate}`: negative count in column `{field}`")]
    NegativeCount { replicate: String, field: String },

    #[error(
        "replicate `{replicate}`: no positive droplets (A' + B' = 0) under the binomial model"
    )]
    ZeroPositiveDroplets { replicate: String },

    #[error("replicate `{replicate}`: total droplet count is zero")]
    ZeroDroplets { replicate: String },

    #[error("duplicate replicate label `{0}`")]
    DuplicateLabel(String),

    #[error("invalid sampler configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("geometric mean of p is numerically 1; mode approximation is undefined")]
    DegenerateGeometricMean,

    #[error("at least {required} draws are required, got {got}")]
    InsufficientDraws { required: usize, got: usize },
}
