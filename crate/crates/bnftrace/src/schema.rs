//! Errors raised while reading the JSON file formats.

use crate::series::{ScalarParseError, SeriesError};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("bad number: {0}")]
    Scalar(#[from] ScalarParseError),
    #[error("invalid series: {0}")]
    Series(#[from] SeriesError),
    #[error("{0}")]
    Schema(String),
}

impl FormatError {
    pub fn schema(msg: impl Into<String>) -> Self {
        FormatError::Schema(msg.into())
    }
}
