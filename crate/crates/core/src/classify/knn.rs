use alloc::vec;
use alloc::vec::Vec;

use super::dataset::{majority, Dataset};
use crate::{math, Error, Result};

/// Brute-force k-nearest-neighbour classifier.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Knn {
    pub k: usize,
    pub train: Dataset,
}

impl Knn {
    pub fn new(train: Dataset, k: usize) -> Result<Self> {
        if k == 0 || k > train.len() {
            return Err(Error::InvalidParameter(alloc::format!(
                "k = {k} must be in 1..={}",
                train.len()
            )));
        }
        Ok(Self { k, train })
    }

    pub fn predict(&self, query: &[f64]) -> Result<usize> {
        knn_predict(&self.train, self.k, query)
    }
}

/// Majority label among the `k` nearest training points (Euclidean).
/// Equal distances favour the lower sample index; tied votes the smaller
/// label.
pub fn knn_predict(train: &Dataset, k: usize, query: &[f64]) -> Result<usize> {
    if k == 0 || k > train.len() {
        return Err(Error::InvalidParameter(alloc::format!(
            "k = {k} must be in 1..={}",
            train.len()
        )));
    }
    train.check_query(query)?;
    let mut dist: Vec<(f64, usize)> = train
        .rows()
        .enumerate()
        .map(|(i, row)| (math::squared_distance(row, query), i))
        .collect();
    if k < dist.len() {
        dist.select_nth_unstable_by(k - 1, |a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    }
    let mut votes = vec![0usize; train.classes()];
    for &(_, i) in &dist[..k] {
        votes[train.label(i)] += 1;
    }
    Ok(majority(&votes))
}

/// `k ≈ √S` for `S` training samples.
pub fn knn_operating_k(train_size: usize) -> usize {
    (math::round(math::sqrt(train_size as f64)) as usize).max(1)
}
