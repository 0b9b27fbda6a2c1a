//! Scenario catalog, run configuration, convergence studies and CSV output
//! for the `dgflow` command.

pub mod config;
pub mod error;
pub mod runner;
pub mod scenarios;
pub mod steady;
pub mod study;

pub use config::{RawConfig, ScenarioConfig};
pub use error::CliError;
