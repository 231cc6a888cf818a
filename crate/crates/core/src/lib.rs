//! Thread-modular interval analysis for concurrent programs with a fixed
//! number of threads.
//!
//! The pipeline is [`frontend`] (parse and lower MTIR), [`domain`] (intervals
//! and environments), [`seq`] (per-thread worklist interpreter), [`tm`] (the
//! outer thread-modular fixpoints), [`feasibility`] (happens-before reasoning
//! over interference combinations) and [`pdg`] (slicing and clustering).
//! [`oracle`] enumerates concrete interleavings for testing.

#![no_std]

extern crate alloc;

pub mod config;
pub mod domain;
mod error;
pub mod feasibility;
pub mod frontend;
pub mod graph;
pub mod oracle;
pub mod pdg;
pub mod seq;
pub mod tm;

pub use config::{AnalysisConfig, Mode};
pub use error::AnalysisError;
