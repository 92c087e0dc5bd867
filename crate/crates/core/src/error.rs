use thiserror::Error;

/// Errors raised across the witness pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("trace is not 1 (got {0})")]
    InvalidTrace(f64),

    #[error("not positive semi-definite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("negative outcome probability {0:.3e}")]
    NegativeProbability(f64),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("{0} is not available on the protocol path")]
    Unavailable(&'static str),

    #[error("dimension guard exceeded: {0}")]
    DimensionGuard(String),

    #[error("inverse map construction failed: {0}")]
    Construction(String),

    #[error("sample budget {have} below planned requirement {need}")]
    Budget { have: u64, need: u64 },

    #[error("no sign change of the minimum eigenvalue on [0, 1]")]
    NoThreshold,

    #[error("malformed state file: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Short machine-readable reason tag.
    pub fn reason(&self) -> &'static str {
        match self {
            Error::Parameter(_) => "parameter",
            Error::Shape(_) => "shape",
            Error::NotHermitian(_) => "not_hermitian",
            Error::InvalidTrace(_) => "invalid_trace",
            Error::NotPsd(_) => "not_psd",
            Error::NegativeProbability(_) => "negative_probability",
            Error::Config(_) => "config",
            Error::Unavailable(_) => "unavailable",
            Error::DimensionGuard(_) => "dimension_guard",
            Error::Construction(_) => "construction",
            Error::Budget { .. } => "budget",
            Error::NoThreshold => "no_threshold",
            Error::Format(_) => "format",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
