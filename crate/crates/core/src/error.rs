use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("the DP kernel diverges in one dimension; use the CSL kernel for 1D moments")]
    DivergentKernel,

    #[error("no finite positive bound: {0}")]
    NoFiniteBound(String),

    #[error("no solution: {0}")]
    NoSolution(String),

    #[error("grid geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("invariant `{invariant}` violated at step {step} (t = {time}): {detail}")]
    InvariantViolation {
        invariant: &'static str,
        step: usize,
        time: f64,
        detail: String,
    },

    #[error("negative density {value:e} at ({x}, {y}) exceeds the mask threshold")]
    NegativeDensity { value: f64, x: f64, y: f64 },

    #[error("nonuniform time samples: {0}")]
    NonUniformTime(String),

    #[error("stability bound violated: {0}")]
    Stability(String),

    #[error("singular covariance (det = {0:e})")]
    SingularCovariance(f64),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
