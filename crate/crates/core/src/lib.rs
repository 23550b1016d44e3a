//! Synthesis and verification of coupling schedules that shape single photons
//! emitted, absorbed or converted by two- and three-level atoms in waveguides.
//!
//! Times are in μs and rates in rad/μs throughout the library.

pub mod cascade;
pub mod cli;
pub mod config;
pub mod error;
pub mod figures;
pub mod io;
pub mod model;
pub mod numerics;
pub mod simulator;
pub mod synthesis;

pub use error::{Error, Result};
