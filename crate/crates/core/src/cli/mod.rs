//! Command-line front end: configuration, stage orchestration, delivery.

pub mod config;
pub mod email;
mod run;
pub mod status;

pub use config::{load_config, Cli, Command, ConfigError, RunArgs, RunConfig};
pub use email::{send_email, EmailError};
pub use run::{run, run_with_backend};
pub use status::{report_status, Outcome, RunStatus};
