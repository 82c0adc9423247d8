//! Companion crate to `stabletree-core`: CSV loading and preprocessing, the
//! dataset registry, model files, the experiment harness and the
//! `stabletree` command-line tool.

pub mod cli;
pub mod data;
pub mod error;
pub mod experiment;
pub mod model_io;

pub use error::{Error, Result};
