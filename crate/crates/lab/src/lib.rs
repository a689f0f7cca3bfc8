//! Experiments on families of regularized shell models: convergence to the
//! limiting solution, eigenmode deviations, the renormalization relation,
//! the viscous bridge, randomized attractor probes and chaotic growth.

pub mod attractor;
pub mod chaos;
pub mod deviation;
pub mod error;
pub mod family;
pub mod pool;
pub mod rg_relation;
pub mod viscous;

pub use attractor::{attractor_probe, AttractorCloud, ProbeConfig, ProbeRecord};
pub use chaos::{chaos_growth, ChaosConfig, ChaosPoint};
pub use deviation::{deviations, estimate_eigenvalue, fit_prefactors, DeviationSeries, EigenvalueEstimate, PrefactorFit};
pub use error::LabError;
pub use family::{limit_reference, run_levels, Family, Reference, RunSpec};
pub use rg_relation::{verify_rg_relation, RgCheck};
pub use viscous::{viscosity_for_level, viscous_bridge, viscous_rescaled_deviation, BridgeSeries};
