//! Command-line front end for `mptaylor`: configuration, trajectory and
//! checkpoint files, the clean-numerical-simulation driver and the scaling
//! benchmark.

pub mod checkpoint;
pub mod commands;
pub mod config;
pub mod error;

pub use checkpoint::Checkpoint;
pub use commands::{cmd_bench, cmd_cns, cmd_diagram, cmd_integrate, BenchmarkRecord, IntegrateOutcome};
pub use config::{parse_config, parse_kv, Command, RunConfig};
pub use error::CliError;
