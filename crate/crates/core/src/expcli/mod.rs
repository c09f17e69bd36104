//! Configuration, validation and execution of named experiments.

pub mod checks;
pub mod config;
pub mod run;

pub use config::{validate_config, ExperimentConfig, ExperimentKind};
pub use run::{run_experiment, RunManifest, SeedEntry, Verdict};
