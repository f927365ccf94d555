//! File formats, benchmark suites, invariant checks and the command-line
//! front end for the robust sparse regression estimator in `robreg-core`.

pub mod bench;
pub mod clock;
pub mod commands;
pub mod config;
pub mod error;
pub mod instance_io;
pub mod report;
pub mod verify;

pub use config::Config;
pub use error::{CliError, Result};
