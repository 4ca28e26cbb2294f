//! Batch front end: load a run configuration, build the space, run the
//! requested checks and write a JSON report.

pub mod config;
pub mod report;
pub mod run;

pub use config::{load_config, parse_config, ConfigError, Overrides, RunConfig};
pub use run::{run_report, RunReport, Status};
