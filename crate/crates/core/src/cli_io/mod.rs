//! Configuration files, on-disk formats and the command-line front end.

mod cli;
mod config;
mod files;

pub use cli::cli_main;
pub use config::{build_initial_state, parse_config, parse_config_with, InitSpec, RunConfig};
pub use files::{
    read_checkpoint, read_series, read_snapshot, write_checkpoint, write_series, write_snapshot,
    Checkpoint,
};
