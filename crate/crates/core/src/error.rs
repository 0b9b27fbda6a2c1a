use thiserror::Error;

/// Errors raised by the discretization, the time stepper and the diagnostics.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum DgError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("unsupported mesh: {0}")]
    UnsupportedMesh(String),

    #[error("kernel moment quadrature did not reach tolerance {tol:e} at cell offset {offset} (estimate {estimate:e})")]
    Tolerance {
        offset: usize,
        tol: f64,
        estimate: f64,
    },

    #[error("shape mismatch: expected {expected} values, got {got}")]
    ShapeMismatch { expected: usize, got: usize },

    /// A cell average became negative after an Euler stage. The time step
    /// controller reacts to this by halving the step.
    #[error("weak positivity violated: cell {cell} has average {average:e}")]
    WeakPositivityViolated { cell: usize, average: f64 },

    #[error("time step underflow at t = {t}: tau = {tau:e} fell below {tau_min:e}")]
    StepUnderflow { t: f64, tau: f64, tau_min: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("reference field lives on a different mesh; resampling is not supported")]
    ResampleUnsupported,

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

pub type Result<T> = std::result::Result<T, DgError>;
