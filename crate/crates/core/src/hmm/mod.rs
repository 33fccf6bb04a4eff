//! Discrete hidden Markov models: scaled forward scoring, Baum-Welch with
//! random restarts, and the HMM2Vec vectorization of the emission matrix.

mod train;
mod vectorize;

use alloc::format;
use alloc::vec::Vec;

use rand::Rng as _;

use crate::{math, rng, Error, Result};

pub use train::{
    baum_welch, fit_from, restart_seed, train_with_restarts, BaumWelchConfig, RestartOutcome, RestartPolicy, Training,
};
pub use vectorize::{hmm2vec, hmm2vec_values, state_order, StateOrdering};

/// Rows of `A`, `B` and `pi` must sum to one within this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// `λ = (A, B, π)` over `N` hidden states and `M` symbols, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct HmmModel {
    n_states: usize,
    n_symbols: usize,
    a: Vec<f64>,
    b: Vec<f64>,
    pi: Vec<f64>,
    /// `ln P(O | λ)` of the training sequence, when trained.
    pub log_likelihood: f64,
    /// Re-estimation steps performed.
    pub iterations: usize,
}

fn check_rows(name: &str, data: &[f64], width: usize) -> Result<()> {
    for (r, row) in data.chunks_exact(width).enumerate() {
        if let Some(v) = row.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidModel(format!("{name}[{r}] has entry {v} outside [0, 1]")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > ROW_SUM_TOL {
            return Err(Error::InvalidModel(format!("{name}[{r}] sums to {sum}")));
        }
    }
    Ok(())
}

impl HmmModel {
    /// Builds a model from flat row-major matrices, validating stochasticity.
    pub fn from_flat(n_states: usize, n_symbols: usize, a: Vec<f64>, b: Vec<f64>, pi: Vec<f64>) -> Result<Self> {
        if n_states == 0 || n_symbols == 0 {
            return Err(Error::InvalidModel("N and M must be positive".into()));
        }
        for (name, got, expected) in [
            ("A", a.len(), n_states * n_states),
            ("B", b.len(), n_states * n_symbols),
            ("pi", pi.len(), n_states),
        ] {
            if got != expected {
                return Err(Error::InvalidModel(format!(
                    "{name} has {got} entries, expected {expected}"
                )));
            }
        }
        let model = Self {
            n_states,
            n_symbols,
            a,
            b,
            pi,
            log_likelihood: f64::NEG_INFINITY,
            iterations: 0,
        };
        model.validate()?;
        Ok(model)
    }

    /// Builds a model from nested rows.
    pub fn from_rows(a: &[Vec<f64>], b: &[Vec<f64>], pi: &[f64]) -> Result<Self> {
        let n = pi.len();
        let m = b.first().map_or(0, Vec::len);
        if a.len() != n || b.len() != n || a.iter().any(|r| r.len() != n) || b.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidModel("ragged or mismatched matrices".into()));
        }
        Self::from_flat(n, m, a.concat(), b.concat(), pi.to_vec())
    }

    /// Near-uniform start: each cell is `1/n` plus a seeded offset in
    /// `[-w, w]`, `w = min(0.05, 0.5/n)`, then each row is renormalized.
    pub fn random(n_states: usize, n_symbols: usize, rng: &mut rng::Rng) -> Self {
        fn row(width: usize, rng: &mut rng::Rng) -> Vec<f64> {
            let base = 1.0 / width as f64;
            let w = 0.05f64.min(0.5 * base);
            let mut row: Vec<f64> = (0..width).map(|_| base + rng.gen_range(-w..=w)).collect();
            let sum: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= sum);
            row
        }
        let a = (0..n_states).flat_map(|_| row(n_states, rng)).collect();
        let b = (0..n_states).flat_map(|_| row(n_symbols, rng)).collect();
        let pi = row(n_states, rng);
        Self {
            n_states,
            n_symbols,
            a,
            b,
            pi,
            log_likelihood: f64::NEG_INFINITY,
            iterations: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_rows("A", &self.a, self.n_states)?;
        check_rows("B", &self.b, self.n_symbols)?;
        check_rows("pi", &self.pi, self.n_states)
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn pi(&self) -> &[f64] {
        &self.pi
    }

    pub fn transition_row(&self, state: usize) -> &[f64] {
        &self.a[state * self.n_states..(state + 1) * self.n_states]
    }

    pub fn emission_row(&self, state: usize) -> &[f64] {
        &self.b[state * self.n_symbols..(state + 1) * self.n_symbols]
    }

    pub fn rows_a(&self) -> Vec<Vec<f64>> {
        self.a.chunks_exact(self.n_states).map(<[f64]>::to_vec).collect()
    }

    pub fn rows_b(&self) -> Vec<Vec<f64>> {
        self.b.chunks_exact(self.n_symbols).map(<[f64]>::to_vec).collect()
    }

    /// Relabels hidden states: new state `i` is old state `perm[i]`.
    pub fn permute_states(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n_states;
        let mut seen = alloc::vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || core::mem::replace(&mut seen[p], true)) {
            return Err(Error::InvalidParameter("not a permutation of the hidden states".into()));
        }
        let mut a = Vec::with_capacity(n * n);
        for &pi in perm {
            for &pj in perm {
                a.push(self.a[pi * n + pj]);
            }
        }
        let b = perm
            .iter()
            .flat_map(|&p| self.emission_row(p).iter().copied())
            .collect();
        let pi = perm.iter().map(|&p| self.pi[p]).collect();
        Ok(Self {
            a,
            b,
            pi,
            ..self.clone()
        })
    }
}

/// `ln P(O | λ)` by the forward algorithm with per-step normalization.
pub fn forward_log_prob(model: &HmmModel, obs: &[usize]) -> Result<f64> {
    if obs.is_empty() {
        return Err(Error::SequenceTooShort { len: 0, min: 1 });
    }
    let n = model.n_states;
    let m = model.n_symbols;
    if let Some(&bad) = obs.iter().find(|&&o| o >= m) {
        return Err(Error::SymbolOutOfRange {
            symbol: bad,
            alphabet: m,
        });
    }
    let mut alpha: Vec<f64> = (0..n).map(|i| model.pi[i] * model.b[i * m + obs[0]]).collect();
    let mut next = alloc::vec![0.0; n];
    let mut log_prob = 0.0;
    for t in 0..obs.len() {
        if t > 0 {
            for j in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    s += alpha[i] * model.a[i * n + j];
                }
                next[j] = s * model.b[j * m + obs[t]];
            }
            core::mem::swap(&mut alpha, &mut next);
        }
        let scale: f64 = alpha.iter().sum();
        if scale <= 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        alpha.iter_mut().for_each(|v| *v /= scale);
        log_prob += math::ln(scale);
    }
    Ok(log_prob)
}
