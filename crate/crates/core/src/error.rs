use thiserror::Error;

/// Errors raised anywhere in the toolkit.
#[derive(Debug, Error)]
pub enum GridError {
    #[error("no frequency response resources: system base power is zero")]
    NoResponseResources,

    #[error("nadir expression invalid: r_g = {r_g} is below f_g = {f_g} (negative square-root argument)")]
    NadirExpressionInvalid { r_g: f64, f_g: f64 },

    #[error("unstable frequency model: {0}")]
    Unstable(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("system cannot meet nadir limit: no commitment pattern keeps the nadir within the limit")]
    NadirUnattainable,

    #[error("enumeration over {units} units exceeds the limit of {limit}; use sampling mode instead")]
    TooManyUnits { units: usize, limit: usize },

    #[error("piecewise-linear fit failed: {0}")]
    FitFailed(String),

    #[error("{path}:{line}: {message}")]
    WindData { path: String, line: u64, message: String },

    #[error("network error: {0}")]
    Network(String),

    #[error("instance error: {0}")]
    Instance(String),

    #[error("no backend configured: {0}")]
    NoBackend(String),

    #[error("solver error: {0}")]
    Solver(String),

    #[error("solution check failed: {0}")]
    Residual(String),

    #[error("day {day} is {status}")]
    DayFailed { day: usize, status: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = GridError> = std::result::Result<T, E>;

impl GridError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        GridError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}
