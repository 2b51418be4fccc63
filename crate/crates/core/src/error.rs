use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("negative degree {0}")]
    NegativeDegree(i64),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("basis mismatch: {0}")]
    BasisMismatch(String),
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("extrapolation outside sampled range: r = {r} not in [{lo}, {hi}]")]
    Extrapolation { r: f64, lo: f64, hi: f64 },
    #[error("patching failed: {0}")]
    Patching(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("serialization error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidParameter(msg.into()))
}
