//! Library side of the `cstar` command: input formats, the example catalog
//! and the subcommand implementations.

pub mod catalog;
pub mod commands;
pub mod io;
