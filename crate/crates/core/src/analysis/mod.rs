//! Fits, blowup detection and the closed-form stationary states of the
//! dyadic cutoff models.

mod blowup;
mod fit;
mod stationary;

use thiserror::Error;

use crate::integrator::IntegrateError;

pub use blowup::{detect_blowup, BlowupEstimate, BlowupOptions};
pub use fit::{fit_double_exponential, fit_geometric, least_squares_line, FitResult};
pub use stationary::{
    stationary_dyadic_exact, stationary_dyadic_state, stationary_eigvec, stationary_limit,
    DYADIC_EIGENVALUE,
};

#[derive(Error, Debug, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("no blowup detected in horizon [{start}, {end}]")]
    NoBlowup { start: f64, end: f64 },
    #[error("need at least {needed} usable points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("value at level {0} is zero or non-finite")]
    BadValue(i64),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}
