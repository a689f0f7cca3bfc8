//! Regularized shell models (dyadic, Gledzer, Sabra), their integrators and
//! the analysis utilities used by the renormalization experiments.

pub mod analysis;
pub mod boundary;
pub mod energy;
pub mod error;
pub mod initial;
pub mod integrator;
pub mod linalg;
pub mod model;
pub mod regularization;
pub mod state;
pub mod symmetry;
pub mod system;

pub use boundary::{builtin_bc, BoundaryFn, BoundarySpec, BoundaryTable};
pub use error::ShellError;
pub use initial::{builtin_ic, BuiltinIc, InitialData};
pub use integrator::{integrate, IntegrateError, Method, SolverConfig, Status, Trajectory};
pub use model::{coupling, Coupling, ModelSpec, ScalarKind, LAMBDA};
pub use regularization::RegularizationSpec;
pub use state::ShellState;
pub use system::{rhs, OdeSystem, Problem};
