//! File formats, the command-line front end and the judge client for
//! consensus selection. The algorithms live in [`consensus_core`].

pub mod candidates;
mod error;
pub mod float;
pub mod report;
pub mod run;
pub mod suffix;
pub mod sweep;
pub mod usc;

pub use error::{Error, Result};
