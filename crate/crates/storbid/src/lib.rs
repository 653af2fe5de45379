//! Command-line companion to `storbid-core`: CSV and JSON formats, run
//! configuration, and the `storbid` binary's subcommands.

pub mod commands;
pub mod config;
pub mod io;
