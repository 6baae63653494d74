//! Experiment runner: configuration, orchestration and table output.

pub mod cli;
pub mod config;
pub mod run;
pub mod table;

pub use config::{parse_config, ExperimentConfig, ExperimentKind};
pub use run::{run_experiment, ExperimentError, RunError};
pub use table::{emit, Cell, ColumnKind, ResultTable};
