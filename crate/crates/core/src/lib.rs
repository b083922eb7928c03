#![no_std]
extern crate alloc;

pub mod dsp;
pub mod error;
pub mod losses;
pub mod model;
pub mod nn;
pub mod prior;
pub mod refine;
pub mod rng;

pub use error::{Error, Result};
