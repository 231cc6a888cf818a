//! Intervals, interval environments and the abstract transfer functions.

mod env;
mod interval;
mod transfer;

pub use env::AbstractEnv;
pub use interval::{Bound, Interval};
pub use transfer::{assign, eval, filter, may_violate, transfer, Post};
