//! Command-line driver and tooling around `flowtm-core`.

pub mod bench;
pub mod cli;
pub mod corpus;
pub mod gen;
pub mod report;
pub mod runner;
