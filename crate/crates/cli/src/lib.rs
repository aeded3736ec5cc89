//! Batch front-end for the `sense-core` simulations: TOML experiment
//! configs, parallel sweeps over grid points and disorder realizations,
//! deterministic CSV tables with a run manifest, and power-law fits.

pub mod config;
pub mod experiments;
pub mod fit;
pub mod run;

pub use config::{ExperimentConfig, ExperimentKind, LoadedConfig, SPEC_VERSION};
pub use fit::{fit, FitOptions};
pub use run::{prepare, run, RunManifest, RunOptions, RunSummary};
