//! Files, configuration, the command line, and the experiment pilot built on
//! `ats-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod error;
pub mod io;
pub mod manifest;
pub mod metrics;
pub mod pilot;

pub use error::CliError;
