//! File formats, batch commands and the benchmark around `fastfit-core`.

pub mod bench;
pub mod cli;
pub mod commands;
pub mod error;
pub mod ffw;
pub mod fmel;
pub mod report;
pub mod wav;

pub use error::{Error, Result};
