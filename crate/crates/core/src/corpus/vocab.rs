use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use super::{MnemonicSequence, OpcodeSequence};
use crate::{Error, Result};

/// The `M` most frequent opcodes of a corpus, ranked. Id 0 is the most
/// frequent opcode and serves as the HMM2Vec anchor.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    mnemonics: Vec<String>,
    /// Share of all corpus tokens, in percent, per retained opcode.
    frequencies: Vec<f64>,
    index: BTreeMap<String, usize>,
}

impl Vocabulary {
    /// Builds a vocabulary from an already ranked mnemonic list.
    pub fn from_ranked(mnemonics: Vec<String>, frequencies: Vec<f64>) -> Result<Self> {
        if mnemonics.is_empty() {
            return Err(Error::InvalidParameter("empty vocabulary".into()));
        }
        if frequencies.len() != mnemonics.len() {
            return Err(Error::Dimension {
                expected: mnemonics.len(),
                got: frequencies.len(),
            });
        }
        let mut index = BTreeMap::new();
        for (id, m) in mnemonics.iter().enumerate() {
            if index.insert(m.clone(), id).is_some() {
                return Err(Error::InvalidParameter(alloc::format!("duplicate mnemonic {m}")));
            }
        }
        Ok(Self {
            mnemonics,
            frequencies,
            index,
        })
    }

    pub fn size(&self) -> usize {
        self.mnemonics.len()
    }

    pub fn id(&self, mnemonic: &str) -> Option<usize> {
        self.index.get(mnemonic).copied()
    }

    pub fn mnemonic(&self, id: usize) -> Option<&str> {
        self.mnemonics.get(id).map(String::as_str)
    }

    pub fn mnemonics(&self) -> &[String] {
        &self.mnemonics
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }
}

/// Ranks mnemonics by global count (ties lexicographic) and keeps the top `m`.
pub fn build_vocabulary(sequences: &[MnemonicSequence], m: usize) -> Result<Vocabulary> {
    if m == 0 {
        return Err(Error::InvalidParameter("vocabulary size must be at least 1".into()));
    }
    let mut counts: BTreeMap<&str, u64> = BTreeMap::new();
    let mut total = 0u64;
    for seq in sequences {
        for token in &seq.mnemonics {
            *counts.entry(token.as_str()).or_default() += 1;
            total += 1;
        }
    }
    if counts.len() < m {
        return Err(Error::Vocabulary {
            requested: m,
            distinct: counts.len(),
        });
    }
    // BTreeMap iterates lexicographically and the sort is stable.
    let mut ranked: Vec<(&str, u64)> = counts.into_iter().collect();
    ranked.sort_by_key(|&(_, c)| core::cmp::Reverse(c));
    ranked.truncate(m);

    let frequencies = ranked.iter().map(|&(_, c)| 100.0 * c as f64 / total as f64).collect();
    let mnemonics = ranked.into_iter().map(|(s, _)| String::from(s)).collect();
    Vocabulary::from_ranked(mnemonics, frequencies)
}

/// Drops out-of-vocabulary opcodes and maps the survivors to ids.
pub fn filter_sequence(seq: &MnemonicSequence, vocab: &Vocabulary) -> Result<OpcodeSequence> {
    let ids: Vec<usize> = seq.mnemonics.iter().filter_map(|m| vocab.id(m)).collect();
    if ids.is_empty() {
        return Err(Error::EmptyAfterFilter {
            sample_id: seq.sample_id.clone(),
        });
    }
    Ok(OpcodeSequence {
        sample_id: seq.sample_id.clone(),
        family: seq.family.clone(),
        ids,
    })
}
