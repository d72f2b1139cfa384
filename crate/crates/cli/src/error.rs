use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// A configuration field is missing or out of range.
    #[error("usage error in `{field}`: {message}")]
    Usage { field: String, message: String },

    #[error(transparent)]
    Core(#[from] ualign_core::Error),

    #[error("{path}: {source}")]
    Document {
        path: String,
        #[source]
        source: serde_json::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl HarnessError {
    pub fn usage(field: impl Into<String>, message: impl Into<String>) -> Self {
        HarnessError::Usage {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Process exit code: 2 for bad input, 3 for failures while running.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Usage { .. } | HarnessError::Document { .. } => 2,
            HarnessError::Core(ualign_core::Error::InvalidArgument(_) | ualign_core::Error::Parse { .. }) => 2,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;
