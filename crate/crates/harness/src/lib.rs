//! Experiment layer over `thinfilm-core`: JSON configs, CSV/JSON artifacts,
//! batch experiments and the `thinfilm` command line.

pub mod cli;
pub mod config;
pub mod experiments;
pub mod io;

pub use config::{ExperimentConfig, SCHEMA_VERSION};
