//! Sampling, Monte Carlo drivers, statistics, file formats and the command
//! line for the weighted power variation expansion implemented in
//! [`pvexp_core`].

pub mod compare;
pub mod config;
pub mod error;
pub mod fbm;
pub mod formats;
pub mod montecarlo;
pub mod order;
pub mod rng;
pub mod stats;
pub mod wickcheck;

pub use error::{Error, Result};
