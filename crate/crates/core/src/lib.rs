//! Opcode-sequence feature engineering and classification.
//!
//! The crate is `no_std` (with `alloc`) and holds every numerical piece of
//! the pipeline: disassembly parsing and vocabulary filtering ([`corpus`]),
//! per-sample hidden Markov models and HMM2Vec vectors ([`hmm`]),
//! skip-gram embeddings ([`embed`]), the four classifiers ([`classify`]) and
//! stratified splitting plus confusion matrices ([`eval`]).
//!
//! File formats, parallel orchestration and the command line live in the
//! `opseq` companion crate.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod classify;
pub mod corpus;
pub mod embed;
mod error;
pub mod eval;
pub mod feature;
pub mod hmm;
pub mod math;
pub mod rng;

pub use error::{Error, Result};
pub use feature::{FeatureVector, Provenance};
