use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::HmmModel;
use crate::{math, rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct BaumWelchConfig {
    pub max_iters: usize,
    /// Stop when the log-likelihood gains less than this.
    pub tol: f64,
    /// Lower clamp on emission probabilities, applied before renormalizing.
    pub emission_floor: f64,
}

impl Default for BaumWelchConfig {
    fn default() -> Self {
        Self {
            max_iters: 500,
            tol: 1e-6,
            emission_floor: 1e-10,
        }
    }
}

/// Restart counts by (filtered) sequence length: lengths inside
/// `[threshold_low, threshold_high]` get `restarts_short`, all others
/// `restarts_long`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct RestartPolicy {
    pub threshold_low: usize,
    pub threshold_high: usize,
    pub restarts_short: usize,
    pub restarts_long: usize,
}

impl Default for RestartPolicy {
    fn default() -> Self {
        Self {
            threshold_low: 1000,
            threshold_high: 5000,
            restarts_short: 100,
            restarts_long: 50,
        }
    }
}

impl RestartPolicy {
    /// Same restart count for every length.
    pub fn fixed(restarts: usize) -> Self {
        Self {
            restarts_short: restarts,
            restarts_long: restarts,
            ..Self::default()
        }
    }

    pub fn restarts_for(&self, len: usize) -> usize {
        if (self.threshold_low..=self.threshold_high).contains(&len) {
            self.restarts_short
        } else {
            self.restarts_long
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.restarts_short == 0 || self.restarts_long == 0 {
            return Err(Error::InvalidParameter("restart counts must be at least 1".into()));
        }
        Ok(())
    }
}

/// A trained model with its per-iteration log-likelihood trace.
#[derive(Debug, Clone)]
pub struct Training {
    pub model: HmmModel,
    /// `ln P(O | λ_k)` for each successive model `λ_0, λ_1, ...`.
    pub log_likelihoods: Vec<f64>,
}

struct Workspace {
    alpha: Vec<f64>,
    beta: Vec<f64>,
    scale: Vec<f64>,
}

struct Statistics {
    log_likelihood: f64,
    pi: Vec<f64>,
    /// Expected transitions `i -> j` over `t < T-1`.
    trans: Vec<f64>,
    /// Expected emissions of symbol `k` from state `i`.
    emit: Vec<f64>,
}

/// Forward-backward pass returning the expected counts for re-estimation.
fn expectation(model: &HmmModel, obs: &[usize], ws: &mut Workspace) -> Statistics {
    let n = model.n_states;
    let m = model.n_symbols;
    let t_len = obs.len();
    let (a, b) = (&model.a, &model.b);
    let Workspace { alpha, beta, scale } = ws;

    for i in 0..n {
        alpha[i] = model.pi[i] * b[i * m + obs[0]];
    }
    for t in 0..t_len {
        if t > 0 {
            let (prev, cur) = alpha.split_at_mut(t * n);
            let prev = &prev[(t - 1) * n..];
            for j in 0..n {
                let mut s = 0.0;
                for i in 0..n {
                    s += prev[i] * a[i * n + j];
                }
                cur[j] = s * b[j * m + obs[t]];
            }
        }
        let row = &mut alpha[t * n..(t + 1) * n];
        let s: f64 = row.iter().sum();
        scale[t] = s;
        let inv = 1.0 / s;
        row.iter_mut().for_each(|v| *v *= inv);
    }

    beta[(t_len - 1) * n..t_len * n].fill(1.0);
    for t in (0..t_len - 1).rev() {
        let (cur, next) = beta.split_at_mut((t + 1) * n);
        let cur = &mut cur[t * n..];
        let next = &next[..n];
        let o = obs[t + 1];
        let inv = 1.0 / scale[t + 1];
        for i in 0..n {
            let mut s = 0.0;
            for j in 0..n {
                s += a[i * n + j] * b[j * m + o] * next[j];
            }
            cur[i] = s * inv;
        }
    }

    let mut trans = vec![0.0; n * n];
    let mut emit = vec![0.0; n * m];
    for t in 0..t_len {
        let al = &alpha[t * n..(t + 1) * n];
        let be = &beta[t * n..(t + 1) * n];
        for i in 0..n {
            emit[i * m + obs[t]] += al[i] * be[i];
        }
        if t + 1 < t_len {
            let o = obs[t + 1];
            let next = &beta[(t + 1) * n..(t + 2) * n];
            let inv = 1.0 / scale[t + 1];
            for i in 0..n {
                let ai = al[i] * inv;
                for j in 0..n {
                    trans[i * n + j] += ai * a[i * n + j] * b[j * m + o] * next[j];
                }
            }
        }
    }

    let pi = (0..n).map(|i| alpha[i] * beta[i]).collect();
    let log_likelihood = scale[..t_len].iter().map(|&s| math::ln(s)).sum();
    Statistics {
        log_likelihood,
        pi,
        trans,
        emit,
    }
}

fn normalize_rows(counts: &[f64], width: usize, fallback: &[f64], out: &mut [f64]) {
    for ((row, fb), dst) in counts
        .chunks_exact(width)
        .zip(fallback.chunks_exact(width))
        .zip(out.chunks_exact_mut(width))
    {
        let total: f64 = row.iter().sum();
        if total > 0.0 && total.is_finite() {
            for (d, &c) in dst.iter_mut().zip(row) {
                *d = c / total;
            }
        } else {
            // State carries no posterior mass: keep its previous row.
            dst.copy_from_slice(fb);
        }
    }
}

fn maximization(model: &mut HmmModel, stats: &Statistics, floor: f64) {
    let n = model.n_states;
    let m = model.n_symbols;
    let mut a = vec![0.0; n * n];
    let mut b = vec![0.0; n * m];
    let mut pi = vec![0.0; n];
    normalize_rows(&stats.trans, n, &model.a, &mut a);
    normalize_rows(&stats.emit, m, &model.b, &mut b);
    normalize_rows(&stats.pi, n, &model.pi, &mut pi);
    if floor > 0.0 {
        for row in b.chunks_exact_mut(m) {
            if row.iter().any(|&v| v < floor) {
                row.iter_mut().for_each(|v| *v = v.max(floor));
                let s: f64 = row.iter().sum();
                row.iter_mut().for_each(|v| *v /= s);
            }
        }
    }
    model.a = a;
    model.b = b;
    model.pi = pi;
}

/// Runs Baum-Welch from a given starting model.
pub fn fit_from(mut model: HmmModel, obs: &[usize], config: &BaumWelchConfig) -> Result<Training> {
    if obs.len() < 2 {
        return Err(Error::SequenceTooShort { len: obs.len(), min: 2 });
    }
    let m = model.n_symbols;
    if let Some(&bad) = obs.iter().find(|&&o| o >= m) {
        return Err(Error::SymbolOutOfRange {
            symbol: bad,
            alphabet: m,
        });
    }
    let n = model.n_states;
    let mut ws = Workspace {
        alpha: vec![0.0; obs.len() * n],
        beta: vec![0.0; obs.len() * n],
        scale: vec![0.0; obs.len()],
    };
    let mut trace = Vec::new();
    let mut iterations = 0;
    loop {
        let stats = expectation(&model, obs, &mut ws);
        let ll = stats.log_likelihood;
        if !ll.is_finite() {
            return Err(Error::Numeric {
                iteration: iterations,
                what: format!("log-likelihood is {ll}"),
            });
        }
        let improved = trace.last().map_or(f64::INFINITY, |prev| ll - prev);
        trace.push(ll);
        model.log_likelihood = ll;
        if improved < config.tol || iterations >= config.max_iters {
            break;
        }
        maximization(&mut model, &stats, config.emission_floor);
        iterations += 1;
        model.iterations = iterations;
        if let Err(e) = model.validate() {
            return Err(Error::Numeric {
                iteration: iterations,
                what: format!("{e}"),
            });
        }
    }
    Ok(Training {
        model,
        log_likelihoods: trace,
    })
}

/// Trains an `n`-state, `m`-symbol model from a seeded near-uniform start.
pub fn baum_welch(obs: &[usize], n: usize, m: usize, config: &BaumWelchConfig, seed: u64) -> Result<Training> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("N and M must be positive".into()));
    }
    let mut rng = rng::rng(seed);
    fit_from(HmmModel::random(n, m, &mut rng), obs, config)
}

/// Seed of restart `index` under master `seed`.
pub fn restart_seed(seed: u64, index: usize) -> u64 {
    rng::derive_seed(seed, index as u64)
}

#[derive(Debug, Clone)]
pub struct RestartOutcome {
    pub best: HmmModel,
    pub best_restart: usize,
    /// Final log-likelihood of every restart, in restart order.
    pub restart_log_likelihoods: Vec<f64>,
}

impl RestartOutcome {
    /// Picks the highest final log-likelihood; ties go to the earlier restart.
    pub fn select(models: Vec<HmmModel>) -> Option<Self> {
        let restart_log_likelihoods: Vec<f64> = models.iter().map(|m| m.log_likelihood).collect();
        let mut best_restart = 0;
        for (i, &ll) in restart_log_likelihoods.iter().enumerate() {
            if ll > restart_log_likelihoods[best_restart] {
                best_restart = i;
            }
        }
        let best = models.into_iter().nth(best_restart)?;
        Some(Self {
            best,
            best_restart,
            restart_log_likelihoods,
        })
    }
}

/// Best of `policy.restarts_for(len)` independently seeded Baum-Welch runs.
pub fn train_with_restarts(
    obs: &[usize],
    n: usize,
    m: usize,
    policy: &RestartPolicy,
    config: &BaumWelchConfig,
    seed: u64,
) -> Result<RestartOutcome> {
    policy.validate()?;
    let restarts = policy.restarts_for(obs.len());
    let models = (0..restarts)
        .map(|r| baum_welch(obs, n, m, config, restart_seed(seed, r)).map(|t| t.model))
        .collect::<Result<Vec<_>>>()?;
    Ok(RestartOutcome::select(models).expect("at least one restart"))
}
