//! Bi-objective two-stage risk-averse facility location.
pub mod cvar;
pub mod error;
pub mod formulation;
pub mod frontier;
pub mod instance;

pub use error::{Error, Result};
pub mod indicators;
pub mod oracle;
pub mod runner;
