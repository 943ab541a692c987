//! Configuration, orchestration and report emission for the `nldiff` binary.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;
