use thiserror::Error;

#[derive(Debug, Error)]
pub enum OqeError {
    #[error("numerical failure: decomposition of a {rows}x{cols} matrix did not converge")]
    NumericalFailure { rows: usize, cols: usize },

    #[error("contract violation: {0}")]
    ContractViolation(String),

    #[error("polar decomposition is degenerate: smallest singular value {smallest:e} relative to {largest:e}")]
    DegeneratePolar { smallest: f64, largest: f64 },

    #[error("shape error: {0}")]
    Shape(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("step-count mismatch: expected {expected}, got {got}")]
    StepMismatch { expected: usize, got: usize },

    #[error("model validation failed: {}", .0.join("; "))]
    Validation(Vec<String>),

    #[error("resource limit: {what} needs {needed} entries, limit is {limit}")]
    Resource { what: &'static str, needed: usize, limit: usize },

    #[error("horizon too short: k = {k} but the window size is {kappa}")]
    HorizonTooShort { k: usize, kappa: usize },

    #[error("environment bound too small: leakage {leakage:e} at {location}")]
    EnvBoundTooSmall { leakage: f64, location: String },

    #[error("optimization diverged at iteration {iteration}: last finite loss {last_loss:e}")]
    OptimizationDiverged { iteration: usize, last_loss: f64 },

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, OqeError>;
