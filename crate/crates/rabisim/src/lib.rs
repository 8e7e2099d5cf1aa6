//! Experiment pipelines, configuration and output for the driven
//! qubit-oscillator simulator.

pub mod config;
pub mod dispatch;
pub mod error;
pub mod experiments;
pub mod fit;
pub mod report;
pub mod signal;

pub use error::{Result, RunError};
