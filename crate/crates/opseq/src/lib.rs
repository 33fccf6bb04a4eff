//! Std companion to `opseq-core`: file formats, parallel feature
//! training, the experiment harness, reports and synthetic corpora.

pub mod error;
pub mod features;
pub mod harness;
pub mod io;
pub mod report;
pub mod synth;

pub use error::{Error, Result};
pub use opseq_core as core;
