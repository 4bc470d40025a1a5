//! Experiment driver for the perisolve solver: config files, benchmark
//! suites, CSV records, and field snapshots.

pub mod commands;
pub mod config;
pub mod error;
pub mod record;

pub use commands::{find_suite, run_bench, run_fields, run_qg_profile, run_solve, ProfileArgs, Suite, SUITES};
pub use config::{Overrides, RunConfig};
pub use error::{Category, CliError, CliResult};
pub use record::{read_snapshot, write_snapshot, RunRecord};
