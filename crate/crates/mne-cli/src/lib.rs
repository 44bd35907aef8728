//! Command-line frontend for the embedding toolkit. Argument resolution
//! (including config-file merging) lives in [`args`]; subcommand bodies in
//! [`run`]. The binary maps outcomes to exit codes: 0 success, 1 usage
//! error, 2 runtime error.

pub mod args;
pub mod run;

pub use args::{resolve, Cli, CliError};
pub use run::{dispatch, RunError};
