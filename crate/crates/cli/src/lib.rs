//! File formats, configuration, simulation and the command line front end
//! for `locmix-core`.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod data;
mod error;
pub mod kv;
pub mod model_io;
pub mod report;
pub mod simulate;

pub use error::CliError;
