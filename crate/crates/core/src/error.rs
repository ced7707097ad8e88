use thiserror::Error;

/// Errors raised by the benchmark core.
#[derive(Debug, Error)]
pub enum Error {
    /// A numeric argument fell outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A ring, condition, schedule or trial configuration is invalid.
    #[error("configuration error: {0}")]
    Config(String),

    /// A regression design matrix lacks full column rank.
    #[error("rank-deficient design: regressor `{regressor}` is collinear with earlier columns")]
    RankDeficient { regressor: &'static str },

    /// Not enough data to compute the requested statistic.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A trial log could not be parsed or has the wrong layout.
    #[error("log format error: {0}")]
    LogFormat(String),

    /// Trial logs carry a schema version this build cannot read, or a mix of versions.
    #[error("schema version mismatch: expected {expected}, found {found}")]
    SchemaVersion { expected: u32, found: u32 },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
