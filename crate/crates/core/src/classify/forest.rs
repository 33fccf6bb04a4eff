//! CART trees with Gini impurity, bagged into a random forest.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng as _;

use super::dataset::{majority, Dataset};
use crate::{math, rng, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum MaxFeatures {
    /// `⌊√D⌋` candidate features per node.
    Auto,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, dim: usize) -> usize {
        match self {
            MaxFeatures::Auto => (math::floor(math::sqrt(dim as f64)) as usize).max(1),
            MaxFeatures::All => dim,
            MaxFeatures::Count(k) => k.clamp(1, dim),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct RfParams {
    pub n_estimators: usize,
    pub min_samples_split: usize,
    pub min_samples_leaf: usize,
    pub max_features: MaxFeatures,
    /// `None` grows until leaves are pure.
    pub max_depth: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for RfParams {
    /// The tuned HMM2Vec forest: 1000 trees, depth 50, no bootstrap.
    fn default() -> Self {
        Self {
            n_estimators: 1000,
            min_samples_split: 2,
            min_samples_leaf: 1,
            max_features: MaxFeatures::Auto,
            max_depth: Some(50),
            bootstrap: false,
            seed: 0,
        }
    }
}

impl RfParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_estimators == 0 {
            return Err(Error::InvalidParameter("n_estimators must be at least 1".into()));
        }
        if self.min_samples_split < 2 {
            return Err(Error::InvalidParameter("min_samples_split must be at least 2".into()));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::InvalidParameter("min_samples_leaf must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Node {
    Leaf {
        label: usize,
    },
    /// `x[feature] <= threshold` goes left.
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut idx = 0;
        loop {
            match self.nodes[idx] {
                Node::Leaf { label } => return label,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => idx = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, left).max(go(nodes, right)),
            }
        }
        go(&self.nodes, 0)
    }
}

fn gini(counts: &[usize], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let t = total as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / t) * (c as f64 / t)).sum::<f64>()
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

struct Builder<'a> {
    data: &'a Dataset,
    params: &'a RfParams,
    max_features: usize,
    rng: rng::Rng,
    nodes: Vec<Node>,
    order: Vec<usize>,
    left_counts: Vec<usize>,
    right_counts: Vec<usize>,
}

impl Builder<'_> {
    fn class_counts(&self, samples: &[usize]) -> Vec<usize> {
        let mut counts = vec![0; self.data.classes()];
        for &s in samples {
            counts[self.data.label(s)] += 1;
        }
        counts
    }

    /// Best Gini split of `samples` on `feature`, thresholds at midpoints
    /// between consecutive distinct values.
    fn best_on_feature(&mut self, samples: &[usize], feature: usize, parent: &[usize]) -> Option<Split> {
        let data = self.data;
        self.order.clear();
        self.order.extend_from_slice(samples);
        self.order
            .sort_by(|&a, &b| data.row(a)[feature].total_cmp(&data.row(b)[feature]));
        let n = samples.len();
        let min_leaf = self.params.min_samples_leaf;
        self.left_counts.iter_mut().for_each(|c| *c = 0);
        self.right_counts.copy_from_slice(parent);
        let mut best: Option<Split> = None;
        for pos in 0..n - 1 {
            let s = self.order[pos];
            let label = data.label(s);
            self.left_counts[label] += 1;
            self.right_counts[label] -= 1;
            let here = data.row(s)[feature];
            let next = data.row(self.order[pos + 1])[feature];
            if here == next {
                continue;
            }
            let (nl, nr) = (pos + 1, n - pos - 1);
            if nl < min_leaf || nr < min_leaf {
                continue;
            }
            let impurity =
                (nl as f64 * gini(&self.left_counts, nl) + nr as f64 * gini(&self.right_counts, nr)) / n as f64;
            if best.as_ref().is_none_or(|b| impurity < b.impurity) {
                let mut threshold = here + (next - here) / 2.0;
                if threshold >= next {
                    threshold = here;
                }
                best = Some(Split {
                    feature,
                    threshold,
                    impurity,
                });
            }
        }
        best
    }

    fn build(&mut self, samples: Vec<usize>, depth: usize) -> usize {
        let counts = self.class_counts(&samples);
        let label = majority(&counts);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { label });

        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_capped = self.params.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_capped || samples.len() < self.params.min_samples_split {
            return id;
        }

        // Draw features in random order; keep looking past `max_features`
        // only while no valid split has been found.
        let mut features: Vec<usize> = (0..self.data.dim()).collect();
        features.shuffle(&mut self.rng);
        let mut best: Option<Split> = None;
        for (visited, &f) in features.iter().enumerate() {
            if visited >= self.max_features && best.is_some() {
                break;
            }
            if let Some(s) = self.best_on_feature(&samples, f, &counts) {
                if best.as_ref().is_none_or(|b| s.impurity < b.impurity) {
                    best = Some(s);
                }
            }
        }
        let Some(split) = best else {
            return id;
        };

        let (left, right): (Vec<usize>, Vec<usize>) = samples
            .into_iter()
            .partition(|&s| self.data.row(s)[split.feature] <= split.threshold);
        let left = self.build(left, depth + 1);
        let right = self.build(right, depth + 1);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

/// Grows one tree on `samples` (indices into `data`, repeats allowed).
pub fn grow_tree(data: &Dataset, samples: Vec<usize>, params: &RfParams, seed: u64) -> DecisionTree {
    let classes = data.classes();
    let mut builder = Builder {
        data,
        params,
        max_features: params.max_features.resolve(data.dim()),
        rng: rng::rng(seed),
        nodes: Vec::new(),
        order: Vec::with_capacity(samples.len()),
        left_counts: vec![0; classes],
        right_counts: vec![0; classes],
    };
    builder.build(samples, 0);
    DecisionTree { nodes: builder.nodes }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RandomForest {
    pub dim: usize,
    pub classes: usize,
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn votes(&self, query: &[f64]) -> Result<Vec<usize>> {
        if query.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: query.len(),
            });
        }
        let mut votes = vec![0; self.classes];
        for tree in &self.trees {
            votes[tree.predict(query)] += 1;
        }
        Ok(votes)
    }

    /// Majority vote; ties go to the smaller label.
    pub fn predict(&self, query: &[f64]) -> Result<usize> {
        Ok(majority(&self.votes(query)?))
    }
}

/// Trains `n_estimators` trees, tree `t` seeded from `(seed, t)`.
pub fn rf_train(data: &Dataset, params: &RfParams) -> Result<RandomForest> {
    params.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidParameter("cannot train a forest on no data".into()));
    }
    let n = data.len();
    let trees = (0..params.n_estimators)
        .map(|t| {
            let seed = rng::derive_seed(params.seed, t as u64);
            let samples = if params.bootstrap {
                let mut r = rng::child(seed, u64::MAX);
                (0..n).map(|_| r.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow_tree(data, samples, params, seed)
        })
        .collect();
    Ok(RandomForest {
        dim: data.dim(),
        classes: data.classes(),
        trees,
    })
}
