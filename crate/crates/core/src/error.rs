use thiserror::Error;

/// Contract and configuration failures raised by the shell-model layer.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum ShellError {
    #[error("{model} coupling takes a window of {expected} amplitudes, got {got}")]
    StencilLength {
        model: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("complex amplitude passed to the real-valued {0} model")]
    ComplexInRealModel(&'static str),
    #[error("state has {got} shells but the regularization requires {expected}")]
    ShellCount { expected: usize, got: usize },
    #[error("a shell state needs at least one shell")]
    EmptyState,
    #[error("non-finite amplitude at shell {0}")]
    NonFinite(usize),
    #[error("state kind does not match the model ({0})")]
    KindMismatch(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unknown initial condition '{0}'")]
    UnknownInitialCondition(String),
    #[error("unknown boundary '{0}'")]
    UnknownBoundary(String),
    #[error("boundary supplies {got} functions, the model needs {expected}")]
    BoundaryArity { expected: usize, got: usize },
    #[error("boundary table covers [{start}, {end}], evaluated at t = {t}")]
    BoundaryRange { start: f64, end: f64, t: f64 },
    #[error("phase symmetry is only defined for the complex model")]
    PhaseOnRealModel,
}
