use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Core(#[from] pvexp_core::Error),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("malformed input {path}: {reason}")]
    Format { path: String, reason: String },
    #[error("metadata mismatch on {field}: {left} vs {right}")]
    MetadataMismatch { field: String, left: String, right: String },
}

impl Error {
    /// Errors caused by the caller's arguments rather than by a failed check.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Self::Config(_)
                | Self::Core(
                    pvexp_core::Error::InvalidArgument(_) | pvexp_core::Error::InvalidHurst(_) | pvexp_core::Error::UnknownModel { .. }
                )
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
