use thiserror::Error;

/// Errors raised by the model, the solvers and the harness.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, got {got}")]
    Dimension {
        context: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate problem: {0}")]
    Degenerate(String),
    #[error("schedule horizon mismatch: outer {outer}, inner {inner}, norms {norms}")]
    HorizonMismatch {
        outer: usize,
        inner: usize,
        norms: usize,
    },
    #[error("solver aborted at t={t}: iterate norm {norm:e} exceeds guard {guard:e}")]
    Diverged { t: usize, norm: f64, guard: f64 },
    #[error("solver aborted at t={t}: {steps} inner steps exceed the cap {cap}")]
    InnerBudget { t: usize, steps: usize, cap: usize },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("reference oracle failed: {0}")]
    Oracle(String),
    #[error("fixture error: {0}")]
    Fixture(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(context: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::Dimension {
            context,
            expected,
            got,
        })
    }
}

pub(crate) fn check_positive(name: &str, value: f64) -> Result<()> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be positive and finite, got {value}")))
    }
}
