use thiserror::Error;

/// Errors raised by the simulation and certification routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("lambda = {re}{im:+}i lies on the spectrum")]
    Spectrum { re: f64, im: f64 },
    #[error("stability error: {0}")]
    Stability(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("certificate incomplete: {0}")]
    CertificateIncomplete(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("horizon error: step of length {needed} does not fit the past-output window of length {window}; enlarge --window")]
    Horizon { needed: f64, window: f64 },
    #[error("grid error: {0}")]
    Grid(String),
    #[error("internal error: {0}")]
    Internal(String),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
