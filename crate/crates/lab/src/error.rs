use shellrg_core::analysis::AnalysisError;
use shellrg_core::{IntegrateError, ShellError};
use thiserror::Error;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum LabError {
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error("reference level {reference} must exceed every consumer level (largest {consumer})")]
    ReferenceLevel { reference: usize, consumer: usize },
    #[error("run at level {level} stopped with status {status} at t = {last_good_time}: {message}")]
    RunAborted {
        level: usize,
        status: &'static str,
        last_good_time: f64,
        message: String,
    },
    #[error("provenance mismatch: {0}")]
    Provenance(String),
    #[error("need at least {needed} consecutive levels, got {got}")]
    TooFewLevels { needed: usize, got: usize },
    #[error("every probe fell below the noise floor {floor:e}")]
    NoUsableProbes { floor: f64 },
    #[error("shared deviation shape is numerically zero")]
    DegenerateShape,
    #[error("invalid request: {0}")]
    Invalid(String),
    #[error("worker panicked: {0}")]
    WorkerPanic(String),
}

impl From<ShellError> for LabError {
    fn from(e: ShellError) -> Self {
        LabError::Integrate(e.into())
    }
}
