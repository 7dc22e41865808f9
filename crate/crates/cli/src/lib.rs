//! Configuration, experiment drivers and CSV result tables behind the
//! `manicov` command-line tool.

pub mod config;
pub mod error;
pub mod experiments;
pub mod table;

pub use config::{Command, ExperimentConfig, Profile};
pub use error::{CliError, ConfigError};
pub use experiments::{run, RunOutput};
pub use table::{Cell, ResultTable};
