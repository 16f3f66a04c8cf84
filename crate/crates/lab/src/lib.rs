//! Experiment harness for `dsbm-core`: configuration, Monte Carlo sweeps,
//! verification reports and the `dsbm-lab` command line.

pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod verify;

pub use error::{LabError, Result};
