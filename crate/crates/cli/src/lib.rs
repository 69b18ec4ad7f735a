//! File formats and subcommands of the `bergbep` command-line tool.

pub mod commands;
pub mod schema;
