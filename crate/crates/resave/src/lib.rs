//! Std companion to `resave-core`: Monte Carlo replications, the
//! recursive-vs-batch timing benchmark, CSV ingestion with held-out
//! evaluation, checkpoints, reports and the `resave` command line.

pub mod checkpoint;
pub mod cli;
pub mod config;
mod error;
pub mod harness;
pub mod ingestion;
pub mod report;
pub mod selfcheck;

pub use error::{Error, Result};
pub use resave_core as core;
