//! Seeded synthetic corpora sampled from planted generators, used where the
//! real malware corpus cannot be shipped.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use super::MnemonicSequence;
use crate::hmm::HmmModel;
use crate::{rng, Error, Result};

/// Source of one family's opcode streams.
#[derive(Debug, Clone, PartialEq)]
pub enum Generator {
    Hmm(HmmModel),
    /// Visible Markov chain: the state is the emitted symbol.
    Markov {
        initial: Vec<f64>,
        transitions: Vec<Vec<f64>>,
    },
}

impl Generator {
    /// The generator as an HMM; a Markov chain gets an identity `B`.
    fn as_hmm(&self) -> Result<HmmModel> {
        match self {
            Generator::Hmm(model) => {
                model.validate()?;
                Ok(model.clone())
            }
            Generator::Markov { initial, transitions } => {
                let n = initial.len();
                let identity: Vec<Vec<f64>> = (0..n)
                    .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                    .collect();
                HmmModel::from_rows(transitions, &identity, initial)
            }
        }
    }

    pub fn n_symbols(&self) -> usize {
        match self {
            Generator::Hmm(model) => model.n_symbols(),
            Generator::Markov { initial, .. } => initial.len(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FamilySpec {
    pub label: String,
    /// Mnemonic for each generator symbol.
    pub alphabet: Vec<String>,
    pub generator: Generator,
}

fn draw(probs: &[f64], rng: &mut rng::Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // Rounding left `acc` just under 1: take the last nonzero entry.
    probs.iter().rposition(|&p| p > 0.0).unwrap_or(0)
}

/// Samples `len` symbols from `model`.
pub fn sample_symbols(model: &HmmModel, len: usize, rng: &mut rng::Rng) -> Vec<usize> {
    let mut out = Vec::with_capacity(len);
    if len == 0 {
        return out;
    }
    let mut state = draw(model.pi(), rng);
    for t in 0..len {
        if t > 0 {
            state = draw(model.transition_row(state), rng);
        }
        out.push(draw(model.emission_row(state), rng));
    }
    out
}

/// Draws `samples_per_family` sequences per family with lengths uniform in
/// `lengths`. Sample ids are `<label>-<index>`; each sample has its own
/// derived random stream.
pub fn generate_synthetic_corpus(
    families: &[FamilySpec],
    samples_per_family: usize,
    lengths: (usize, usize),
    seed: u64,
) -> Result<Vec<MnemonicSequence>> {
    let (min_len, max_len) = lengths;
    if min_len == 0 || max_len < min_len {
        return Err(Error::InvalidParameter(format!(
            "bad length range {min_len}..={max_len}"
        )));
    }
    let mut labels: Vec<&str> = families.iter().map(|f| f.label.as_str()).collect();
    labels.sort_unstable();
    if labels.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::InvalidParameter("duplicate family label".into()));
    }

    let mut out = Vec::with_capacity(families.len() * samples_per_family);
    for (f, family) in families.iter().enumerate() {
        let model = family.generator.as_hmm()?;
        if family.alphabet.len() != model.n_symbols() {
            return Err(Error::Dimension {
                expected: model.n_symbols(),
                got: family.alphabet.len(),
            });
        }
        let family_seed = rng::derive_seed(seed, f as u64);
        for i in 0..samples_per_family {
            let mut r = rng::child(family_seed, i as u64);
            let len = r.gen_range(min_len..=max_len);
            let mnemonics = sample_symbols(&model, len, &mut r)
                .into_iter()
                .map(|s| family.alphabet[s].clone())
                .collect();
            out.push(MnemonicSequence {
                sample_id: format!("{}-{:04}", family.label, i),
                family: family.label.clone(),
                mnemonics,
            });
        }
    }
    Ok(out)
}

/// Forty common x86 mnemonics, roughly in real-world frequency order.
pub const X86_MNEMONICS: [&str; 40] = [
    "mov", "push", "call", "pop", "add", "cmp", "jmp", "lea", "jz", "test", "jnz", "sub", "xor", "retn", "and", "inc",
    "or", "movzx", "dec", "jb", "shl", "shr", "imul", "jbe", "ja", "nop", "sar", "leave", "jl", "jge", "movsx", "neg",
    "not", "sbb", "adc", "xchg", "cdq", "idiv", "stosd", "rol",
];

/// Minimum over states of the L1 distance between two models' `B` rows.
pub fn min_row_distance(a: &HmmModel, b: &HmmModel) -> f64 {
    (0..a.n_states().min(b.n_states()))
        .map(|s| {
            a.emission_row(s)
                .iter()
                .zip(b.emission_row(s))
                .map(|(x, y)| (x - y).abs())
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

/// Planted two-state families over [`X86_MNEMONICS`].
///
/// State 0 emits `mov` with probability 0.35 and state 1 with 0.05, so the
/// anchor opcode identifies the states in every family. The remaining mass
/// follows a Zipf profile with four family-specific boosted opcodes per
/// state. Signatures are redrawn until every pair of families is at least
/// `min_distance` apart (L1, per `B` row).
pub fn planted_families(count: usize, min_distance: f64, seed: u64) -> Result<Vec<FamilySpec>> {
    const ANCHOR: [f64; 2] = [0.35, 0.05];
    const BOOSTED: usize = 4;
    const POOL: usize = 24;
    let k = X86_MNEMONICS.len();
    let alphabet: Vec<String> = X86_MNEMONICS.iter().map(|s| s.to_string()).collect();
    let mut r = rng::rng(seed);
    let mut models: Vec<HmmModel> = Vec::with_capacity(count);

    for _ in 0..count {
        let mut attempts = 0;
        let model = loop {
            attempts += 1;
            if attempts > 10_000 {
                return Err(Error::InvalidParameter(format!(
                    "cannot place {count} families {min_distance} apart"
                )));
            }
            let mut b = Vec::with_capacity(2 * k);
            for &anchor in &ANCHOR {
                let mut weights: Vec<f64> = (0..k)
                    .map(|s| if s == 0 { 0.0 } else { 1.0 / (s as f64 + 2.0) })
                    .collect();
                let mut picked = 0;
                while picked < BOOSTED {
                    let s = r.gen_range(1..=POOL);
                    if weights[s] < 1.0 {
                        weights[s] = 1.0;
                        picked += 1;
                    }
                }
                let total: f64 = weights.iter().sum();
                weights[0] = anchor * total / (1.0 - anchor);
                let total: f64 = weights.iter().sum();
                b.extend(weights.iter().map(|w| w / total));
            }
            let stay = 0.85 + 0.1 * r.gen::<f64>();
            let leave = 0.1 + 0.1 * r.gen::<f64>();
            let a = vec![stay, 1.0 - stay, leave, 1.0 - leave];
            let model = HmmModel::from_flat(2, k, a, b, vec![0.5, 0.5])?;
            if models
                .iter()
                .all(|other| min_row_distance(&model, other) >= min_distance)
            {
                break model;
            }
        };
        models.push(model);
    }

    Ok(models
        .into_iter()
        .enumerate()
        .map(|(f, model)| FamilySpec {
            label: format!("family{f}"),
            alphabet: alphabet.clone(),
            generator: Generator::Hmm(model),
        })
        .collect())
}
