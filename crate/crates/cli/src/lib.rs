//! Experiment runner for exploration-phase multichannel ALOHA: experiment
//! files, sweeps, CSV output and gnuplot scripts.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod figures;
pub mod gnuplot;

pub use error::{CliError, Result};
