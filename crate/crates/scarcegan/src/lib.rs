//! File formats, KDD Cup 1999 ingestion, experiment orchestration and the
//! command-line front end around `scarcegan-core`.

pub mod cli;
pub mod config;
pub mod encode;
pub mod error;
pub mod experiment;
pub mod io;
pub mod kdd;
pub mod report;
pub mod tasks;

pub use error::{Error, Result};
pub use scarcegan_core as core;
