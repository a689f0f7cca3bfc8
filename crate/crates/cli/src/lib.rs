//! Declarative experiment runner: JSON configs, seeded parallel sweeps,
//! CSV and JSON outputs with a provenance manifest.

pub mod config;
pub mod output;
pub mod persist;
pub mod presets;
pub mod runner;

pub use config::{parse_config, ConfigError, ExperimentConfig, ExperimentKind};
pub use persist::run_to_dir;
pub use runner::{execute, Outcome};
