//! Experiment runner: TOML configs, the pipelines behind each `rhm`
//! subcommand, and versioned CSV output.

pub mod config;
pub mod error;
pub mod pipelines;
pub mod records;

pub use config::{parse_grid, ExperimentConfig, Kind};
pub use error::CliError;
pub use pipelines::run;
