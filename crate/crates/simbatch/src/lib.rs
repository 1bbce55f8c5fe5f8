//! Batch experiments over the iterative voting model: configuration, grid
//! execution, CSV output and trace audits.

pub mod batch;
pub mod config;
pub mod output;
pub mod trace_io;

pub use batch::{run_experiment, run_preflib, ExperimentOutput};
pub use config::{load_config, parse_config, ConfigError, ExperimentConfig};
