use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    /// A value supplied for a named configuration key failed validation.
    #[error("invalid value for `{key}`: {reason}")]
    Validation { key: String, reason: String },

    #[error("usage error: {0}")]
    Usage(String),

    #[error("contract violation: {0}")]
    Contract(String),

    #[error("numeric error in {context}: {detail}")]
    Numeric { context: String, detail: String },

    #[error("degenerate embedding: pre-normalization norm {norm:e} is below 1e-12")]
    DegenerateEmbedding { norm: f64 },

    #[error("batch shape error: {0}")]
    BatchShape(String),

    /// Weighted losses are all zero, so the point already lies on every ray.
    #[error("weighted losses sum to zero; point is at the origin of objective space")]
    OnOrigin,

    #[error("divergence at step {step}: parameter norm {norm:e} exceeds 1e6")]
    Divergence { step: usize, norm: f64 },

    #[error("schema error: {0}")]
    Schema(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn numeric(context: impl Into<String>, detail: impl Into<String>) -> Self {
        Error::Numeric {
            context: context.into(),
            detail: detail.into(),
        }
    }

    pub fn validation(key: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            key: key.into(),
            reason: reason.into(),
        }
    }

    /// Process exit code for the CLI: 2 for usage/validation, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Usage(_) | Error::Validation { .. } | Error::Config(_) => 2,
            _ => 1,
        }
    }
}
