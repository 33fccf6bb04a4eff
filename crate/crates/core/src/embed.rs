//! Per-sample skip-gram embeddings trained with negative sampling, and the
//! Word2Vec feature vector built from them.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::corpus::{OpcodeSequence, Vocabulary};
use crate::{math, rng, Error, FeatureVector, Provenance, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct Word2VecParams {
    pub epochs: usize,
    /// Learning rate at the first pair; decays linearly to `lr_end`.
    pub lr_start: f64,
    pub lr_end: f64,
    /// Negative samples per (center, context) pair.
    pub negatives: usize,
}

impl Default for Word2VecParams {
    fn default() -> Self {
        Self {
            epochs: 5,
            lr_start: 0.025,
            lr_end: 0.0001,
            negatives: 5,
        }
    }
}

/// One embedding vector of length `dim` per vocabulary opcode.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    pub dim: usize,
    pub vocab_size: usize,
    pub window: usize,
    pub params: Word2VecParams,
    pub seed: u64,
    /// `vocab_size` rows of `dim` center ("input") vectors.
    pub vectors: Vec<f64>,
}

impl EmbeddingMatrix {
    pub fn row(&self, id: usize) -> &[f64] {
        &self.vectors[id * self.dim..(id + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.vectors.chunks_exact(self.dim)
    }
}

/// Full training output: the embedding plus what tests and diagnostics need.
#[derive(Debug, Clone)]
pub struct Word2VecTraining {
    pub embedding: EmbeddingMatrix,
    /// Output ("context") vectors, same layout as the embedding.
    pub context: Vec<f64>,
    /// Mean pair loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

/// Loss and gradients of one negative-sampling term.
#[derive(Debug, Clone, PartialEq)]
pub struct SgnsGradient {
    pub loss: f64,
    pub center: Vec<f64>,
    pub context: Vec<f64>,
    pub negatives: Vec<Vec<f64>>,
}

struct Coefficients {
    loss: f64,
    /// `σ(u·v) - 1`
    positive: f64,
    /// `σ(u·n_i)` per negative
    negatives: Vec<f64>,
}

fn coefficients<'a>(center: &[f64], context: &[f64], negatives: impl Iterator<Item = &'a [f64]>) -> Coefficients {
    let score = math::dot(center, context);
    let mut loss = -math::log_sigmoid(score);
    let positive = math::sigmoid(score) - 1.0;
    let negatives = negatives
        .map(|n| {
            let s = math::dot(center, n);
            loss -= math::log_sigmoid(-s);
            math::sigmoid(s)
        })
        .collect();
    Coefficients {
        loss,
        positive,
        negatives,
    }
}

/// `-ln σ(u·v) - Σ ln σ(-u·n_i)` and its gradient with respect to every input.
pub fn sgns_loss_and_grad(center: &[f64], context: &[f64], negatives: &[&[f64]]) -> Result<SgnsGradient> {
    let dim = center.len();
    for v in core::iter::once(context).chain(negatives.iter().copied()) {
        if v.len() != dim {
            return Err(Error::Dimension {
                expected: dim,
                got: v.len(),
            });
        }
    }
    let c = coefficients(center, context, negatives.iter().copied());
    let mut center_grad: Vec<f64> = context.iter().map(|v| c.positive * v).collect();
    for (n, &g) in negatives.iter().zip(&c.negatives) {
        for (d, &x) in center_grad.iter_mut().zip(n.iter()) {
            *d += g * x;
        }
    }
    Ok(SgnsGradient {
        loss: c.loss,
        center: center_grad,
        context: center.iter().map(|u| c.positive * u).collect(),
        negatives: c
            .negatives
            .iter()
            .map(|&g| center.iter().map(|u| g * u).collect())
            .collect(),
    })
}

/// Cumulative unigram^(3/4) table over the sample's own token counts.
fn noise_table(ids: &[usize], vocab_size: usize) -> Vec<f64> {
    let mut counts = vec![0u64; vocab_size];
    for &id in ids {
        counts[id] += 1;
    }
    let mut acc = 0.0;
    let mut cumulative: Vec<f64> = counts
        .iter()
        .map(|&c| {
            acc += math::powf(c as f64, 0.75);
            acc
        })
        .collect();
    cumulative.iter_mut().for_each(|v| *v /= acc);
    cumulative
}

fn draw_noise(cumulative: &[f64], rng: &mut rng::Rng) -> usize {
    let u: f64 = rng.gen();
    cumulative.partition_point(|&c| c <= u).min(cumulative.len() - 1)
}

fn initial_vectors(vocab_size: usize, dim: usize, seed: u64) -> Vec<f64> {
    let mut r = rng::rng(seed);
    let bound = 0.5 / dim as f64;
    (0..vocab_size * dim).map(|_| r.gen_range(-bound..=bound)).collect()
}

/// Skip-gram with negative sampling over one opcode sequence.
///
/// Every pair of positions at distance `1..=window` is a training pair.
/// Opcodes absent from the sequence keep their seeded starting vectors.
pub fn train_word2vec_detailed(
    seq: &OpcodeSequence,
    vocab: &Vocabulary,
    dim: usize,
    window: usize,
    params: &Word2VecParams,
    seed: u64,
) -> Result<Word2VecTraining> {
    let ids = &seq.ids;
    let m = vocab.size();
    if ids.len() < 2 {
        return Err(Error::SequenceTooShort { len: ids.len(), min: 2 });
    }
    if dim == 0 || window == 0 {
        return Err(Error::InvalidParameter(
            "embedding dimension and window must be positive".into(),
        ));
    }
    if let Some(&bad) = ids.iter().find(|&&id| id >= m) {
        return Err(Error::SymbolOutOfRange {
            symbol: bad,
            alphabet: m,
        });
    }

    let mut input = initial_vectors(m, dim, seed);
    let mut output = vec![0.0; m * dim];
    let noise = noise_table(ids, m);
    let mut r = rng::child(seed, 1);

    let t_len = ids.len();
    let pairs_per_epoch: usize = (0..t_len).map(|t| t.min(window) + (t_len - 1 - t).min(window)).sum();
    let total_pairs = (pairs_per_epoch * params.epochs).max(1) as f64;
    let mut step = 0usize;
    let mut epoch_losses = Vec::with_capacity(params.epochs);
    let mut negatives: Vec<usize> = Vec::with_capacity(params.negatives);
    let mut center_grad = vec![0.0; dim];

    for epoch in 0..params.epochs {
        let mut loss_sum = 0.0;
        for t in 0..t_len {
            let center = ids[t];
            let lo = t.saturating_sub(window);
            let hi = (t + window).min(t_len - 1);
            for j in (lo..=hi).filter(|&j| j != t) {
                let context = ids[j];
                let progress = step as f64 / total_pairs;
                let lr = params.lr_start - (params.lr_start - params.lr_end) * progress;
                step += 1;

                negatives.clear();
                for _ in 0..params.negatives {
                    let n = draw_noise(&noise, &mut r);
                    if n != context {
                        negatives.push(n);
                    }
                }

                let u = &input[center * dim..(center + 1) * dim];
                let c = coefficients(
                    u,
                    &output[context * dim..(context + 1) * dim],
                    negatives.iter().map(|&n| &output[n * dim..(n + 1) * dim]),
                );
                loss_sum += c.loss;

                for (k, g) in center_grad.iter_mut().enumerate() {
                    *g = c.positive * output[context * dim + k];
                }
                for (&n, &g) in negatives.iter().zip(&c.negatives) {
                    for (k, cg) in center_grad.iter_mut().enumerate() {
                        *cg += g * output[n * dim + k];
                    }
                }
                for k in 0..dim {
                    let uk = input[center * dim + k];
                    output[context * dim + k] -= lr * c.positive * uk;
                    for (&n, &g) in negatives.iter().zip(&c.negatives) {
                        output[n * dim + k] -= lr * g * uk;
                    }
                }
                for (k, g) in center_grad.iter().enumerate() {
                    input[center * dim + k] -= lr * g;
                }
            }
        }
        let mean = loss_sum / pairs_per_epoch as f64;
        if !mean.is_finite() {
            return Err(Error::Numeric {
                iteration: epoch,
                what: "non-finite skip-gram loss".into(),
            });
        }
        epoch_losses.push(mean);
    }

    Ok(Word2VecTraining {
        embedding: EmbeddingMatrix {
            dim,
            vocab_size: m,
            window,
            params: *params,
            seed,
            vectors: input,
        },
        context: output,
        epoch_losses,
    })
}

pub fn train_word2vec(
    seq: &OpcodeSequence,
    vocab: &Vocabulary,
    dim: usize,
    window: usize,
    params: &Word2VecParams,
    seed: u64,
) -> Result<EmbeddingMatrix> {
    train_word2vec_detailed(seq, vocab, dim, window, params, seed).map(|t| t.embedding)
}

/// Concatenates the per-opcode vectors in vocabulary rank order.
pub fn word2vec_features(
    emb: &EmbeddingMatrix,
    vocab: &Vocabulary,
    sample_id: impl Into<String>,
    family: impl Into<String>,
) -> Result<FeatureVector> {
    if emb.vocab_size != vocab.size() || emb.vectors.len() != emb.vocab_size * emb.dim {
        return Err(Error::Dimension {
            expected: vocab.size() * emb.dim,
            got: emb.vectors.len(),
        });
    }
    Ok(FeatureVector {
        sample_id: sample_id.into(),
        family: family.into(),
        provenance: Provenance::Word2Vec,
        values: emb.vectors.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn vocab(m: usize) -> Vocabulary {
        Vocabulary::from_ranked((0..m).map(|i| format!("op{i}")).collect(), vec![0.0; m]).unwrap()
    }

    fn alternating(len: usize) -> OpcodeSequence {
        OpcodeSequence::new("alt", "f", (0..len).map(|i| i % 2).collect())
    }

    #[test]
    fn zero_dot_product_loss_is_ln2() {
        let g = sgns_loss_and_grad(&[1.0, 0.0], &[0.0, 1.0], &[]).unwrap();
        assert!((g.loss - math::ln(2.0)).abs() < 1e-15);
    }

    #[test]
    fn loss_vanishes_as_score_grows() {
        let mut prev = f64::INFINITY;
        for scale in [1.0, 2.0, 4.0, 8.0, 16.0, 32.0] {
            let u = [scale, 0.5 * scale];
            let loss = sgns_loss_and_grad(&u, &u, &[]).unwrap().loss;
            assert!(loss < prev && loss >= 0.0);
            prev = loss;
        }
        assert!(prev < 1e-12);
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        assert!(sgns_loss_and_grad(&[1.0], &[1.0, 2.0], &[]).is_err());
        assert!(sgns_loss_and_grad(&[1.0], &[1.0], &[&[1.0, 2.0]]).is_err());
    }

    #[test]
    fn zero_epochs_returns_initialization() {
        let params = Word2VecParams {
            epochs: 0,
            ..Default::default()
        };
        let emb = train_word2vec(&alternating(20), &vocab(3), 4, 2, &params, 9).unwrap();
        assert_eq!(emb.vectors, initial_vectors(3, 4, 9));
        assert!(emb.vectors.iter().all(|v| v.abs() <= 0.5 / 4.0));
    }

    #[test]
    fn absent_opcodes_keep_initial_vectors() {
        let emb = train_word2vec(&alternating(50), &vocab(4), 3, 1, &Word2VecParams::default(), 2).unwrap();
        let init = initial_vectors(4, 3, 2);
        assert_eq!(emb.row(2), &init[6..9]);
        assert_eq!(emb.row(3), &init[9..12]);
        assert_ne!(emb.row(0), &init[0..3]);
    }

    #[test]
    fn too_short_sequence_is_an_error() {
        let seq = OpcodeSequence::new("s", "f", vec![0]);
        assert!(matches!(
            train_word2vec(&seq, &vocab(2), 2, 1, &Word2VecParams::default(), 0),
            Err(Error::SequenceTooShort { .. })
        ));
    }

    #[test]
    fn epoch_loss_decreases_on_alternating_sequence() {
        let t = train_word2vec_detailed(&alternating(10_000), &vocab(2), 2, 1, &Word2VecParams::default(), 4).unwrap();
        assert_eq!(t.epoch_losses.len(), 5);
        for w in t.epoch_losses.windows(2) {
            assert!(w[1] <= w[0], "{:?}", t.epoch_losses);
        }
    }

    #[test]
    fn features_concatenate_rows_in_rank_order() {
        let emb = EmbeddingMatrix {
            dim: 2,
            vocab_size: 2,
            window: 1,
            params: Word2VecParams::default(),
            seed: 0,
            vectors: vec![1.0, 2.0, 3.0, 4.0],
        };
        let f = word2vec_features(&emb, &vocab(2), "s", "f").unwrap();
        assert_eq!(f.values, vec![1.0, 2.0, 3.0, 4.0]);
        assert_eq!(f.provenance, Provenance::Word2Vec);
        assert!(word2vec_features(&emb, &vocab(3), "s", "f").is_err());
    }
}
