//! Per-sample feature training fanned out over a rayon pool. Results come
//! back in input order and every sample has its own derived seed, so the
//! output does not depend on the number of worker threads.

use opseq_core::corpus::{OpcodeSequence, Vocabulary};
use opseq_core::embed::{train_word2vec, word2vec_features, EmbeddingMatrix, Word2VecParams};
use opseq_core::hmm::{
    baum_welch, hmm2vec, restart_seed, BaumWelchConfig, HmmModel, RestartOutcome, RestartPolicy, StateOrdering,
};
use opseq_core::rng::{derive_seed, hash_str};
use opseq_core::FeatureVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, StageExt};

const STREAM_HMM: u64 = 0x686d6d;
const STREAM_W2V: u64 = 0x773276;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Hmm2vec,
    Word2vec,
}

/// Everything that determines one sample's feature vector.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureSpec {
    Hmm2Vec {
        n: usize,
        restarts: RestartPolicy,
        baum_welch: BaumWelchConfig,
        ordering: StateOrdering,
    },
    Word2Vec {
        n: usize,
        window: usize,
        params: Word2VecParams,
    },
}

/// Master seed of one sample's HMM restarts.
pub fn hmm_sample_seed(seed: u64, sample_id: &str) -> u64 {
    derive_seed(derive_seed(seed, STREAM_HMM), hash_str(sample_id))
}

/// Word2Vec seed. Shared by all samples so that every sample starts from
/// the same initial embedding.
pub fn word2vec_seed(seed: u64) -> u64 {
    derive_seed(seed, STREAM_W2V)
}

/// Restarts run in parallel; selection matches the serial
/// [`opseq_core::hmm::train_with_restarts`].
pub fn train_with_restarts_par(
    obs: &[usize],
    n: usize,
    m: usize,
    policy: &RestartPolicy,
    config: &BaumWelchConfig,
    seed: u64,
) -> opseq_core::Result<RestartOutcome> {
    policy.validate()?;
    let models = (0..policy.restarts_for(obs.len()))
        .into_par_iter()
        .map(|r| baum_welch(obs, n, m, config, restart_seed(seed, r)).map(|t| t.model))
        .collect::<opseq_core::Result<Vec<HmmModel>>>()?;
    Ok(RestartOutcome::select(models).expect("at least one restart"))
}

/// Best-of-restarts HMM for every sample, plus the seed each one used.
pub fn train_hmms(
    sequences: &[OpcodeSequence],
    vocab: &Vocabulary,
    n: usize,
    policy: &RestartPolicy,
    config: &BaumWelchConfig,
    seed: u64,
) -> Result<Vec<(HmmModel, u64)>> {
    sequences
        .par_iter()
        .map(|seq| {
            let s = hmm_sample_seed(seed, &seq.sample_id);
            opseq_core::hmm::train_with_restarts(&seq.ids, n, vocab.size(), policy, config, s)
                .map(|o| (o.best, s))
                .stage("hmm-train", Some(&seq.sample_id))
        })
        .collect()
}

pub fn train_embeddings(
    sequences: &[OpcodeSequence],
    vocab: &Vocabulary,
    n: usize,
    window: usize,
    params: &Word2VecParams,
    seed: u64,
) -> Result<Vec<EmbeddingMatrix>> {
    let s = word2vec_seed(seed);
    sequences
        .par_iter()
        .map(|seq| train_word2vec(seq, vocab, n, window, params, s).stage("w2v-train", Some(&seq.sample_id)))
        .collect()
}

/// Feature vectors for `sequences`, in order.
pub fn compute_features(
    sequences: &[OpcodeSequence],
    vocab: &Vocabulary,
    spec: &FeatureSpec,
    seed: u64,
) -> Result<Vec<FeatureVector>> {
    match spec {
        FeatureSpec::Hmm2Vec {
            n,
            restarts,
            baum_welch,
            ordering,
        } => {
            let models = train_hmms(sequences, vocab, *n, restarts, baum_welch, seed)?;
            sequences
                .iter()
                .zip(&models)
                .map(|(seq, (model, _))| {
                    hmm2vec(model, vocab, *ordering, seq.sample_id.clone(), seq.family.clone())
                        .stage("hmm2vec", Some(&seq.sample_id))
                })
                .collect()
        }
        FeatureSpec::Word2Vec { n, window, params } => {
            let embeddings = train_embeddings(sequences, vocab, *n, *window, params, seed)?;
            sequences
                .iter()
                .zip(&embeddings)
                .map(|(seq, emb)| {
                    word2vec_features(emb, vocab, seq.sample_id.clone(), seq.family.clone())
                        .stage("w2v-features", Some(&seq.sample_id))
                })
                .collect()
        }
    }
}
