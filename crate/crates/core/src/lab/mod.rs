//! Configurable experiments and their reports.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{parse_config, ExperimentConfig, ExperimentKind, OutputFormat};
pub use experiments::run;
pub use report::Report;
