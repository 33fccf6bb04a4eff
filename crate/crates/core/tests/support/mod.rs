//! Independent reference implementations used as test oracles. Nothing
//! here calls into the code paths it checks.
#![allow(dead_code)]

use opseq_core::hmm::HmmModel;
use opseq_core::rng::{self, Rng};
use rand::Rng as _;

pub fn random_stochastic_row(width: usize, r: &mut Rng) -> Vec<f64> {
    let mut row: Vec<f64> = (0..width).map(|_| r.gen_range(0.02..1.0)).collect();
    let s: f64 = row.iter().sum();
    row.iter_mut().for_each(|v| *v /= s);
    row
}

pub fn random_model(n: usize, m: usize, r: &mut Rng) -> HmmModel {
    let a: Vec<Vec<f64>> = (0..n).map(|_| random_stochastic_row(n, r)).collect();
    let b: Vec<Vec<f64>> = (0..n).map(|_| random_stochastic_row(m, r)).collect();
    let pi = random_stochastic_row(n, r);
    HmmModel::from_rows(&a, &b, &pi).unwrap()
}

/// `ln Σ_Q P(O, Q | λ)` by enumerating all `N^T` hidden paths.
pub fn path_sum_log_prob(model: &HmmModel, obs: &[usize]) -> f64 {
    let a = model.rows_a();
    let b = model.rows_b();
    let pi = model.pi();
    let n = pi.len();
    let t = obs.len();
    let mut total = 0.0;
    let mut path = vec![0usize; t];
    loop {
        let mut p = pi[path[0]] * b[path[0]][obs[0]];
        for s in 1..t {
            p *= a[path[s - 1]][path[s]] * b[path[s]][obs[s]];
        }
        total += p;
        // Odometer increment over base-n digits.
        let mut k = 0;
        while k < t {
            path[k] += 1;
            if path[k] < n {
                break;
            }
            path[k] = 0;
            k += 1;
        }
        if k == t {
            break;
        }
    }
    total.ln()
}

/// Draws an observation sequence from `model` with its own sampler.
pub fn sample_hmm(model: &HmmModel, len: usize, r: &mut Rng) -> Vec<usize> {
    let pick = |p: &[f64], r: &mut Rng| {
        let u: f64 = r.gen();
        let mut acc = 0.0;
        for (i, &v) in p.iter().enumerate() {
            acc += v;
            if u < acc {
                return i;
            }
        }
        p.len() - 1
    };
    let a = model.rows_a();
    let b = model.rows_b();
    let mut s = pick(model.pi(), r);
    let mut out = Vec::with_capacity(len);
    for t in 0..len {
        if t > 0 {
            s = pick(&a[s], r);
        }
        out.push(pick(&b[s], r));
    }
    out
}

/// Largest per-entry gap between two `B` matrices, minimized over the
/// hidden-state permutations of `fitted` (N ≤ 3).
pub fn permuted_b_distance(fitted: &HmmModel, truth: &HmmModel) -> f64 {
    let n = truth.n_states();
    let perms: Vec<Vec<usize>> = match n {
        1 => vec![vec![0]],
        2 => vec![vec![0, 1], vec![1, 0]],
        3 => vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ],
        _ => panic!("unsupported N"),
    };
    perms
        .iter()
        .map(|p| {
            (0..n)
                .flat_map(|s| {
                    fitted
                        .emission_row(p[s])
                        .iter()
                        .zip(truth.emission_row(s))
                        .map(|(x, y)| (x - y).abs())
                        .collect::<Vec<_>>()
                })
                .fold(0.0, f64::max)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Central difference `(f(x+h) - f(x-h)) / 2h` for coordinate `i`.
pub fn central_difference(f: impl Fn(&[f64]) -> f64, x: &[f64], i: usize, h: f64) -> f64 {
    let mut plus = x.to_vec();
    let mut minus = x.to_vec();
    plus[i] += h;
    minus[i] -= h;
    (f(&plus) - f(&minus)) / (2.0 * h)
}

/// `|a - b| / max(|a|, |b|)`, zero when both vanish below `floor`.
pub fn relative_error(a: f64, b: f64, floor: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale < floor {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// SGNS loss written directly from its definition.
pub fn sgns_loss_reference(u: &[f64], v: &[f64], negatives: &[Vec<f64>]) -> f64 {
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let log_sig = |x: f64| -(1.0 + (-x).exp()).ln();
    -log_sig(dot(u, v)) - negatives.iter().map(|n| log_sig(-dot(u, n))).sum::<f64>()
}

pub fn gaussian(r: &mut Rng) -> f64 {
    // Box-Muller
    let u1: f64 = r.gen_range(f64::EPSILON..1.0);
    let u2: f64 = r.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Isotropic Gaussian blobs, `per_class` points around each center.
pub fn blobs(centers: &[Vec<f64>], sigma: f64, per_class: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut r = rng::rng(seed);
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for i in 0..per_class {
        for (c, center) in centers.iter().enumerate() {
            let _ = i;
            rows.push(center.iter().map(|&m| m + sigma * gaussian(&mut r)).collect());
            labels.push(c);
        }
    }
    (rows, labels)
}

/// Full-sort brute-force kNN vote.
pub fn knn_brute_force(rows: &[Vec<f64>], labels: &[usize], classes: usize, k: usize, q: &[f64]) -> usize {
    let mut d: Vec<(f64, usize)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| (r.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
        .collect();
    d.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
    let mut votes = vec![0usize; classes];
    for &(_, i) in &d[..k] {
        votes[labels[i]] += 1;
    }
    let max = *votes.iter().max().unwrap();
    votes.iter().position(|&v| v == max).unwrap()
}

/// Euclidean projection onto `{0 ≤ α ≤ C, yᵀα = 0}` by bisection on the
/// multiplier of the equality constraint.
fn project(z: &[f64], y: &[f64], c: f64) -> Vec<f64> {
    let at = |mu: f64| -> (Vec<f64>, f64) {
        let a: Vec<f64> = z.iter().zip(y).map(|(zi, yi)| (zi - mu * yi).clamp(0.0, c)).collect();
        let s = a.iter().zip(y).map(|(ai, yi)| ai * yi).sum();
        (a, s)
    };
    let bound = z.iter().map(|v| v.abs()).fold(0.0, f64::max) + c + 1.0;
    let (mut lo, mut hi) = (-bound, bound);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        // yᵀα(μ) is non-increasing in μ.
        if at(mid).1 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(0.5 * (lo + hi)).0
}

/// Dual SVM objective maximized by accelerated projected gradient.
pub fn reference_dual_objective(gram: &[f64], y: &[f64], c: f64, iterations: usize) -> f64 {
    let n = y.len();
    let q = |i: usize, j: usize| y[i] * y[j] * gram[i * n + j];
    let objective = |a: &[f64]| {
        let mut quad = 0.0;
        for i in 0..n {
            for j in 0..n {
                quad += a[i] * a[j] * q(i, j);
            }
        }
        a.iter().sum::<f64>() - 0.5 * quad
    };
    // Lipschitz constant of the gradient: bounded by the Frobenius norm of Q.
    let lipschitz = (0..n * n).map(|k| gram[k] * gram[k]).sum::<f64>().sqrt().max(1e-12);
    let step = 1.0 / lipschitz;
    let mut alpha = vec![0.0; n];
    let mut momentum = alpha.clone();
    let mut t = 1.0f64;
    for _ in 0..iterations {
        let grad: Vec<f64> = (0..n)
            .map(|i| 1.0 - (0..n).map(|j| q(i, j) * momentum[j]).sum::<f64>())
            .collect();
        let z: Vec<f64> = (0..n).map(|i| momentum[i] + step * grad[i]).collect();
        let next = project(&z, y, c);
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        momentum = (0..n)
            .map(|i| next[i] + (t - 1.0) / t_next * (next[i] - alpha[i]))
            .collect();
        alpha = next;
        t = t_next;
    }
    objective(&alpha)
}
