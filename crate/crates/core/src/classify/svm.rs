//! Soft-margin support vector machines solved in the dual by SMO, with a
//! one-vs-rest wrapper for more than two classes.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::Dataset;
use crate::{math, Error, Result};

/// Curvature used when a pair's second derivative is not positive.
const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "type", rename_all = "lowercase"))]
pub enum Kernel {
    Linear,
    /// `exp(-gamma * |x - z|²)`
    Rbf {
        gamma: f64,
    },
}

impl Kernel {
    pub fn eval(&self, x: &[f64], z: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => math::dot(x, z),
            Kernel::Rbf { gamma } => math::exp(-gamma * math::squared_distance(x, z)),
        }
    }

    /// Full `n × n` Gram matrix of the dataset rows.
    pub fn gram(&self, data: &Dataset) -> Vec<f64> {
        let n = data.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = self.eval(data.row(i), data.row(j));
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        k
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct SvmParams {
    pub kernel: Kernel,
    /// Box constraint (penalty) `C`.
    pub c: f64,
    /// Stop once the maximal KKT violation falls below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            kernel: Kernel::Linear,
            c: 1.0,
            tol: 1e-3,
            max_iter: 1_000_000,
        }
    }
}

impl SvmParams {
    pub fn linear(c: f64) -> Self {
        Self {
            kernel: Kernel::Linear,
            c,
            ..Self::default()
        }
    }

    pub fn rbf(c: f64, gamma: f64) -> Self {
        Self {
            kernel: Kernel::Rbf { gamma },
            c,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0) {
            return Err(Error::InvalidParameter(format!("C must be positive, got {}", self.c)));
        }
        if let Kernel::Rbf { gamma } = self.kernel {
            if !(gamma > 0.0) {
                return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
            }
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidParameter("tol must be positive".into()));
        }
        Ok(())
    }
}

/// Dual solution `α`, offset `b` (decision `Σ α_i y_i K(x_i, x) + b`) and
/// the final maximal violation.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub violation: f64,
}

/// SMO on `min ½ αᵀQα - Σα`, `0 ≤ α ≤ C`, `yᵀα = 0`, `Q_ij = y_i y_j K_ij`.
///
/// Each step optimizes the pair made of the maximal violator and the
/// partner with the best second-order gain; the loop ends when the maximal
/// violation `m(α) - M(α)` drops below `tol`.
pub fn solve_dual(gram: &[f64], y: &[f64], c: f64, tol: f64, max_iter: usize) -> Result<DualSolution> {
    let n = y.len();
    if gram.len() != n * n {
        return Err(Error::Dimension {
            expected: n * n,
            got: gram.len(),
        });
    }
    let q = |i: usize, j: usize| y[i] * y[j] * gram[i * n + j];
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, yi: f64| (yi > 0.0 && a < c) || (yi < 0.0 && a > 0.0);
    let in_low = |a: f64, yi: f64| (yi > 0.0 && a > 0.0) || (yi < 0.0 && a < c);

    let mut iterations = 0;
    let violation = loop {
        let mut g_max = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        let mut g_min = f64::INFINITY;
        for t in 0..n {
            let v = -y[t] * grad[t];
            if in_up(alpha[t], y[t]) && v > g_max {
                g_max = v;
                i = t;
            }
            if in_low(alpha[t], y[t]) && v < g_min {
                g_min = v;
            }
        }
        let gap = g_max - g_min;
        if i == usize::MAX || gap < tol || iterations >= max_iter {
            break if gap.is_finite() { gap } else { 0.0 };
        }

        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            let b = g_max + y[t] * grad[t];
            if b > 0.0 {
                let mut a = gram[i * n + i] + gram[t * n + t] - 2.0 * gram[i * n + t];
                if a <= 0.0 {
                    a = TAU;
                }
                let gain = -(b * b) / a;
                if gain < best {
                    best = gain;
                    j = t;
                }
            }
        }
        if j == usize::MAX {
            break gap;
        }

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let mut quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let mut quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
            if quad <= 0.0 {
                quad = TAU;
            }
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q(t, i) * di + q(t, j) * dj;
        }
        iterations += 1;
        if !grad[i].is_finite() {
            return Err(Error::Numeric {
                iteration: iterations,
                what: "non-finite SMO gradient".into(),
            });
        }
    };

    // Offset from free vectors, or the midpoint of the feasible interval.
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    let mut free_sum = 0.0;
    let mut free = 0usize;
    for t in 0..n {
        let yg = y[t] * grad[t];
        let at_upper = alpha[t] >= c;
        let at_lower = alpha[t] <= 0.0;
        if at_upper {
            if y[t] < 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else if at_lower {
            if y[t] > 0.0 {
                upper = upper.min(yg);
            } else {
                lower = lower.max(yg);
            }
        } else {
            free += 1;
            free_sum += yg;
        }
    }
    let rho = if free > 0 {
        free_sum / free as f64
    } else {
        (upper + lower) / 2.0
    };

    Ok(DualSolution {
        alpha,
        bias: -rho,
        iterations,
        violation,
    })
}

/// Dual objective `Σα - ½ ΣΣ α_i α_j y_i y_j K_ij` (to be maximized).
pub fn dual_objective(gram: &[f64], y: &[f64], alpha: &[f64]) -> f64 {
    let n = y.len();
    let mut quad = 0.0;
    for i in 0..n {
        if alpha[i] == 0.0 {
            continue;
        }
        for j in 0..n {
            quad += alpha[i] * alpha[j] * y[i] * y[j] * gram[i * n + j];
        }
    }
    alpha.iter().sum::<f64>() - 0.5 * quad
}

/// A trained two-class machine; positive decision values mean class `+1`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinarySvm {
    pub kernel: Kernel,
    pub dim: usize,
    /// Support vectors, row-major.
    pub support: Vec<f64>,
    /// `α_i y_i` per support vector.
    pub coef: Vec<f64>,
    pub bias: f64,
    /// Primal weights, kept for the linear kernel.
    pub weights: Option<Vec<f64>>,
}

impl BinarySvm {
    fn from_solution(data: &Dataset, y: &[f64], kernel: Kernel, sol: &DualSolution) -> Self {
        let dim = data.dim();
        let mut support = Vec::new();
        let mut coef = Vec::new();
        for (i, &a) in sol.alpha.iter().enumerate() {
            if a > 0.0 {
                support.extend_from_slice(data.row(i));
                coef.push(a * y[i]);
            }
        }
        let weights = matches!(kernel, Kernel::Linear).then(|| {
            let mut w = vec![0.0; dim];
            for (sv, &c) in support.chunks_exact(dim).zip(&coef) {
                for (wk, &x) in w.iter_mut().zip(sv) {
                    *wk += c * x;
                }
            }
            w
        });
        Self {
            kernel,
            dim,
            support,
            coef,
            bias: sol.bias,
            weights,
        }
    }

    pub fn decision(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: x.len(),
            });
        }
        if let Some(w) = &self.weights {
            return Ok(math::dot(w, x) + self.bias);
        }
        Ok(self
            .support
            .chunks_exact(self.dim)
            .zip(&self.coef)
            .map(|(sv, &c)| c * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias)
    }

    pub fn support_count(&self) -> usize {
        self.coef.len()
    }
}

fn train_binary(data: &Dataset, gram: &[f64], y: &[f64], params: &SvmParams) -> Result<BinarySvm> {
    let has_pos = y.iter().any(|&v| v > 0.0);
    let has_neg = y.iter().any(|&v| v < 0.0);
    if !(has_pos && has_neg) {
        return Err(Error::SingleClass);
    }
    let sol = solve_dual(gram, y, params.c, params.tol, params.max_iter)?;
    Ok(BinarySvm::from_solution(data, y, params.kernel, &sol))
}

/// Trains a machine separating `positive` from every other label.
pub fn svm_train(data: &Dataset, positive: usize, params: &SvmParams) -> Result<BinarySvm> {
    params.validate()?;
    let y: Vec<f64> = data
        .labels()
        .iter()
        .map(|&l| if l == positive { 1.0 } else { -1.0 })
        .collect();
    let gram = params.kernel.gram(data);
    train_binary(data, &gram, &y, params)
}

/// One machine per class; prediction is the arg-max decision value.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OvrSvm {
    pub dim: usize,
    pub classes: usize,
    pub machines: Vec<BinarySvm>,
}

impl OvrSvm {
    pub fn decisions(&self, query: &[f64]) -> Result<Vec<f64>> {
        self.machines.iter().map(|m| m.decision(query)).collect()
    }

    pub fn predict(&self, query: &[f64]) -> Result<usize> {
        let refs: Vec<&BinarySvm> = self.machines.iter().collect();
        svm_predict_multiclass(&refs, self.classes, query)
    }
}

/// One-vs-rest training. The Gram matrix is computed once and shared.
pub fn svm_train_ovr(data: &Dataset, params: &SvmParams) -> Result<OvrSvm> {
    params.validate()?;
    let gram = params.kernel.gram(data);
    let machines = (0..data.classes())
        .map(|class| {
            let y: Vec<f64> = data
                .labels()
                .iter()
                .map(|&l| if l == class { 1.0 } else { -1.0 })
                .collect();
            train_binary(data, &gram, &y, params)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OvrSvm {
        dim: data.dim(),
        classes: data.classes(),
        machines,
    })
}

/// Arg-max over per-class decision values; ties go to the smaller label.
pub fn svm_predict_multiclass(machines: &[&BinarySvm], classes: usize, query: &[f64]) -> Result<usize> {
    if machines.len() < classes {
        return Err(Error::MissingMachine(machines.len()));
    }
    let mut best = 0;
    let mut best_value = f64::NEG_INFINITY;
    for (class, m) in machines.iter().take(classes).enumerate() {
        let v = m.decision(query)?;
        if v > best_value {
            best = class;
            best_value = v;
        }
    }
    Ok(best)
}
