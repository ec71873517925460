use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch: {left:?} vs {right:?}")]
    GridMismatch { left: [usize; 3], right: [usize; 3] },

    #[error("invalid medium parameters: {0}")]
    InvalidParams(String),

    #[error("invalid step control: {0}")]
    InvalidControl(String),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("velocity divergence {linf:e} exceeds tolerance {tol:e}")]
    Divergence { linf: f64, tol: f64 },

    #[error("density is not positive (min {min:e})")]
    DensityNotPositive { min: f64 },

    /// The step produced NaN or Inf; carries the last good state for inspection.
    #[error("non-finite value in `{field}` at t = {time}")]
    NonFinite {
        field: String,
        time: f64,
        last_good: Box<crate::dynamics::FluidState>,
    },

    #[error("fit failed: {0}")]
    Fit(String),

    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Stable machine-readable tag used in CLI error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::GridMismatch { .. } => "grid_mismatch",
            Error::InvalidParams(_) => "invalid_params",
            Error::InvalidControl(_) => "invalid_control",
            Error::InvalidScenario(_) => "invalid_scenario",
            Error::InvalidConfig(_) => "invalid_config",
            Error::Divergence { .. } => "divergence",
            Error::DensityNotPositive { .. } => "density_not_positive",
            Error::NonFinite { .. } => "non_finite",
            Error::Fit(_) => "fit_failed",
            Error::Io { .. } => "io",
            Error::Json(_) => "json",
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
