//! IO, experiment, and CLI companion to `devfuse-core`.
//!
//! This crate carries everything that needs the standard library: PNG/PPM
//! image files, the reduce -> magnify -> score batch experiment with CSV
//! reports, epsilon sweeps, the deterministic timing benchmark, the pooling
//! gradient checker, and JSON-based preference fusion. The `devfuse` binary
//! exposes all of it as subcommands.

pub mod bench;
pub mod cli;
pub mod decide;
pub mod error;
pub mod experiment;
pub mod gradcheck;
pub mod image_io;
pub mod synth;
pub mod util;

pub use error::{Error, Result};
