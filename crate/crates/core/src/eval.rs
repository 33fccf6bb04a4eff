//! Stratified partitioning and confusion matrices.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::{rng, Error, Result};

/// Splits sample indices into partitions with the given fractions,
/// stratified by label. Each label's indices are shuffled (seeded per
/// label) and cut by largest-remainder rounding. Partitions come back
/// sorted ascending.
pub fn stratified_split(labels: &[usize], fractions: &[f64], seed: u64) -> Result<Vec<Vec<usize>>> {
    if fractions.is_empty() || fractions.iter().any(|&f| !(f > 0.0)) {
        return Err(Error::InvalidParameter("split fractions must be positive".into()));
    }
    let total: f64 = fractions.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidParameter(alloc::format!(
            "split fractions sum to {total}"
        )));
    }
    let classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut parts: Vec<Vec<usize>> = vec![Vec::new(); fractions.len()];
    for class in 0..classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        if members.len() < fractions.len() {
            return Err(Error::FamilyTooSmall {
                family: class,
                count: members.len(),
                partitions: fractions.len(),
            });
        }
        members.shuffle(&mut rng::child(seed, class as u64));
        let mut start = 0;
        for (part, size) in parts.iter_mut().zip(largest_remainder(members.len(), fractions)) {
            part.extend_from_slice(&members[start..start + size]);
            start += size;
        }
    }
    parts.iter_mut().for_each(|p| p.sort_unstable());
    Ok(parts)
}

/// Integer sizes summing to `n`, proportional to `fractions`; leftover
/// units go to the largest fractional parts, earlier partitions first.
pub fn largest_remainder(n: usize, fractions: &[f64]) -> Vec<usize> {
    let exact: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    // Nudge before flooring so 0.7 * 1000 = 699.999... counts as 700.
    let mut sizes: Vec<usize> = exact.iter().map(|&e| crate::math::floor(e + 1e-9) as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - sizes[a] as f64;
        let rb = exact[b] - sizes[b] as f64;
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

/// Counts indexed `[true][predicted]`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfusionMatrix {
    pub classes: usize,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> Self {
        Self {
            classes,
            counts: vec![vec![0; classes]; classes],
        }
    }

    pub fn from_pairs(classes: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut m = Self::new(classes);
        for (truth, predicted) in pairs {
            m.record(truth, predicted);
        }
        m
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        self.counts[truth][predicted] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.classes).map(|i| self.counts[i][i]).sum()
    }

    /// Trace over total; 0 for an empty matrix.
    pub fn accuracy(&self) -> f64 {
        let total = self.total();
        if total == 0 {
            0.0
        } else {
            self.correct() as f64 / total as f64
        }
    }

    /// Row-normalized diagonal; `None` for classes with no test samples.
    pub fn per_class_accuracy(&self) -> Vec<Option<f64>> {
        self.counts
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let n: u64 = row.iter().sum();
                (n > 0).then(|| row[i] as f64 / n as f64)
            })
            .collect()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }
}
