//! Synthetic corpus spec files (`opseq synth`).

use std::path::{Path, PathBuf};

use opseq_core::corpus::synth::{generate_synthetic_corpus, planted_families, FamilySpec, Generator};
use opseq_core::corpus::MnemonicSequence;
use opseq_core::hmm::HmmModel;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, StageExt};
use crate::io;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum GeneratorDef {
    Hmm {
        #[serde(rename = "A")]
        a: Vec<Vec<f64>>,
        #[serde(rename = "B")]
        b: Vec<Vec<f64>>,
        pi: Vec<f64>,
    },
    Markov {
        initial: Vec<f64>,
        transitions: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDef {
    pub label: String,
    pub alphabet: Vec<String>,
    pub generator: GeneratorDef,
}

fn default_min_distance() -> f64 {
    0.4
}

/// Two-state families over common x86 mnemonics with pairwise separated
/// emission rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedDef {
    pub count: usize,
    #[serde(default = "default_min_distance")]
    pub min_distance: f64,
    #[serde(default)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub families: Vec<FamilyDef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub planted: Option<PlantedDef>,
    pub samples_per_family: usize,
    pub length_range: (usize, usize),
    #[serde(default)]
    pub seed: u64,
}

impl SynthSpec {
    pub fn family_specs(&self) -> Result<Vec<FamilySpec>> {
        match (&self.planted, self.families.is_empty()) {
            (Some(p), true) => planted_families(p.count, p.min_distance, p.seed).stage("synth", None),
            (None, false) => self
                .families
                .iter()
                .map(|f| {
                    let generator = match &f.generator {
                        GeneratorDef::Hmm { a, b, pi } => {
                            Generator::Hmm(HmmModel::from_rows(a, b, pi).stage("synth", Some(&f.label))?)
                        }
                        GeneratorDef::Markov { initial, transitions } => Generator::Markov {
                            initial: initial.clone(),
                            transitions: transitions.clone(),
                        },
                    };
                    Ok(FamilySpec {
                        label: f.label.clone(),
                        alphabet: f.alphabet.clone(),
                        generator,
                    })
                })
                .collect(),
            _ => Err(Error::Config(
                "synth spec needs exactly one of `families` or `planted`".into(),
            )),
        }
    }

    /// Family labels in spec order, and the generated sequences.
    pub fn generate(&self) -> Result<(Vec<String>, Vec<MnemonicSequence>)> {
        let specs = self.family_specs()?;
        let labels = specs.iter().map(|f| f.label.clone()).collect();
        let seqs = generate_synthetic_corpus(&specs, self.samples_per_family, self.length_range, self.seed)
            .stage("synth", None)?;
        Ok((labels, seqs))
    }
}

/// Generates the corpus described by `spec` into `dir`; returns the
/// manifest path.
pub fn write_synthetic_corpus(spec: &SynthSpec, dir: &Path) -> Result<PathBuf> {
    let (labels, seqs) = spec.generate()?;
    io::write_corpus(dir, &labels, &seqs)
}
