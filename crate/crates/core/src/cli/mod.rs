//! Command-line layer: unit-tagged configuration, CSV tables and mode dispatch.

pub mod config;
pub mod run;
pub mod table;

pub use config::{parse_config, parse_config_with, Mode, Provenance, RunConfig};
pub use run::{run, RunOutput};
pub use table::{parse_experiment, read_experiment, ExperimentRow, Table};
