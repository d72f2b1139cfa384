//! Experiment harness over `ualign-core`: solve, certify, sweep and reproduce.

pub mod commands;
pub mod config;
pub mod error;
pub mod report;

pub use commands::{cmd_certify, cmd_reproduce, cmd_solve, cmd_sweep, Target};
pub use config::{resolve_engine, ExperimentConfig, CAP_ENV};
pub use error::{HarnessError, Result};
pub use report::{Check, Report, Row, SCHEMA_VERSION};
