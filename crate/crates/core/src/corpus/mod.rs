//! Opcode sequences: disassembly parsing, the top-M vocabulary, robustness
//! scrambling and synthetic corpus generation.

mod listing;
mod scramble;
pub mod synth;
mod vocab;

use alloc::string::String;
use alloc::vec::Vec;

pub use listing::{parse_disassembly, render_listing, ParseOptions, RawListing};
pub use scramble::{scramble, scramble_block, scramble_in_place, ScrambleBlock};
pub use vocab::{build_vocabulary, filter_sequence, Vocabulary};

/// Samples shorter than this after filtering are skipped by the pipeline.
pub const MIN_ADMITTED_LEN: usize = 10;

/// One sample's opcode stream before vocabulary filtering.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MnemonicSequence {
    pub sample_id: String,
    pub family: String,
    pub mnemonics: Vec<String>,
}

/// One sample's opcode stream after filtering: ids in `0..M`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpcodeSequence {
    pub sample_id: String,
    pub family: String,
    pub ids: Vec<usize>,
}

impl MnemonicSequence {
    pub fn new(sample_id: impl Into<String>, family: impl Into<String>, mnemonics: Vec<String>) -> Self {
        Self {
            sample_id: sample_id.into(),
            family: family.into(),
            mnemonics,
        }
    }

    pub fn len(&self) -> usize {
        self.mnemonics.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mnemonics.is_empty()
    }
}

impl OpcodeSequence {
    pub fn new(sample_id: impl Into<String>, family: impl Into<String>, ids: Vec<usize>) -> Self {
        Self {
            sample_id: sample_id.into(),
            family: family.into(),
            ids,
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}
