use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("field kind mismatch: {0}")]
    Kind(String),
    #[error("broken Hermitian symmetry (max defect {defect:e})")]
    Symmetry { defect: f64 },
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("invalid interpolant: {0}")]
    Interpolant(String),
    #[error("observation kind mismatch: expected {expected}, found {found}")]
    ObservationMismatch { expected: String, found: String },
    #[error("sampling failed: {0}")]
    Sampling(String),
    #[error("advective CFL {cfl:.3} exceeds 0.5; use dt <= {suggested_dt:e}")]
    Stability { cfl: f64, suggested_dt: f64 },
    #[error("numerical divergence; last valid time {last_valid_time}")]
    Divergence { last_valid_time: f64 },
    #[error("empty input: {0}")]
    Empty(String),
    #[error("missing extra parameter: {0}")]
    MissingExtra(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("malformed data: {0}")]
    Format(String),
    #[error("unsupported format version {found} (this build reads up to {supported})")]
    Version { found: u32, supported: u32 },
    #[error("missing series channel: {0}")]
    MissingChannel(String),
    #[error("malformed CSV: {0}")]
    Csv(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
