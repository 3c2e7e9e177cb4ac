//! Experiment driver for difference-quotient POD reduced-order models of
//! the 1D viscous Burgers equation: FOM snapshot generation, POD bases in
//! the four frameworks, `r` sweeps with error and bound diagnostics,
//! solution profiles and verification suites.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod formats;
pub mod verify;

pub use config::{Abscissa, ExperimentConfig, Framework, Ranks};
pub use error::{LabError, Result};
