use std::path::PathBuf;

use thiserror::Error;

use crate::solver::FieldState;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// Strict hyperbolicity lost (l = 0 or u = v).
    #[error("hyperbolicity degenerate: {0}")]
    HyperbolicityDegenerate(String),

    #[error("refinement failure: estimated error {estimate:.3e} exceeds tolerance {tolerance:.3e}")]
    RefinementFailure { estimate: f64, tolerance: f64 },

    #[error("divergent integral: {0}")]
    Divergence(String),

    #[error("no sign switch detected on [{t_start}, {t_end}]")]
    NoSignSwitch { t_start: f64, t_end: f64 },

    #[error("phi blows up at t = {t}: denominator {denominator:.3e}")]
    BlowUp { t: f64, denominator: f64 },

    /// Solver abort; carries the last accepted state for diagnosis.
    #[error("solver aborted at t = {t}: {reason}")]
    SolverAbort {
        t: f64,
        reason: String,
        snapshot: Box<FieldState>,
    },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("format error in {path:?}: {reason}")]
    Format { path: PathBuf, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
