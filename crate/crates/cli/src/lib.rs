//! Command-line front end: config loading, validation batteries, experiments
//! and CSV output.

pub mod commands;
pub mod config;
pub mod experiments;
pub mod output;
pub mod validate;
