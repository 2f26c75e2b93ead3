//! Command-line front end: configuration, data I/O and report files.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
