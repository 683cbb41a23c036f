//! Experiment drivers behind the `bptree` binary.
//!
//! Each driver takes a validated configuration and a master seed and returns
//! a [`report::Report`]. Everything except the timing fields is a pure
//! function of the two, so reports can be diffed across runs.

pub mod compare;
pub mod error;
pub mod heaviness;
pub mod report;
pub mod run;
pub mod track_error;

pub use error::CliError;
pub use report::{Emit, Report};
