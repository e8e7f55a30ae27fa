//! Error type shared by every module.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("item {item} is not usable by this scheme: {reason}")]
    SchemeMismatch { item: usize, reason: String },

    #[error("item {item} has zero variance, so its kurtosis is undefined")]
    ZeroVariance { item: usize },

    /// A resource cap was hit. Carries the requirement, the cap and advice.
    #[error("{what} exceeds its budget: requires {required}, cap is {cap}; {advice}")]
    Budget {
        what: String,
        required: String,
        cap: String,
        advice: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub fn budget(
        what: impl Into<String>,
        required: impl ToString,
        cap: impl ToString,
        advice: impl Into<String>,
    ) -> Self {
        Error::Budget {
            what: what.into(),
            required: required.to_string(),
            cap: cap.to_string(),
            advice: advice.into(),
        }
    }

    pub fn is_budget(&self) -> bool {
        matches!(self, Error::Budget { .. })
    }

    /// Process exit code used by the command line tool.
    pub fn exit_code(&self) -> i32 {
        if self.is_budget() {
            2
        } else {
            1
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
