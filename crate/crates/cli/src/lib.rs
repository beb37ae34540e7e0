//! Instance generation, batch runs, reports and replay for `hbsg`.

pub mod config;
pub mod error;
pub mod instance;
pub mod report;
pub mod run;

pub use config::{ExperimentConfig, OracleMode, Overrides};
pub use error::{CliError, Result};
pub use instance::{generate_instance, AmbientGen, Instance, InstanceSpec, StringGen};
pub use report::Report;
pub use run::{run_experiment, run_instance, verify_report, RunOptions};
