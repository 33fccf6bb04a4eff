use alloc::vec::Vec;

use crate::{Error, Result};

/// Row-major feature matrix with one class label per row.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Dataset {
    dim: usize,
    classes: usize,
    features: Vec<f64>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(rows: &[Vec<f64>], labels: Vec<usize>, classes: usize) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::Dimension {
                expected: dim,
                got: bad.len(),
            });
        }
        Self::from_flat(rows.concat(), labels, dim, classes)
    }

    pub fn from_flat(features: Vec<f64>, labels: Vec<usize>, dim: usize, classes: usize) -> Result<Self> {
        if classes < 2 {
            return Err(Error::InvalidParameter("a dataset needs at least 2 classes".into()));
        }
        if dim == 0 || features.len() != labels.len() * dim {
            return Err(Error::Dimension {
                expected: labels.len() * dim.max(1),
                got: features.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::InvalidParameter(alloc::format!(
                "label {bad} >= class count {classes}"
            )));
        }
        if let Some(v) = features.iter().find(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(alloc::format!("non-finite feature value {v}")));
        }
        Ok(Self {
            dim,
            classes,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.features.chunks_exact(self.dim)
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    /// Rows `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            dim: self.dim,
            classes: self.classes,
            features: indices.iter().flat_map(|&i| self.row(i).iter().copied()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn check_query(&self, query: &[f64]) -> Result<()> {
        if query.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: query.len(),
            });
        }
        Ok(())
    }

    /// Copy with every feature multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            features: self.features.iter().map(|v| v * factor).collect(),
            ..self.clone()
        }
    }
}

/// Most voted label; ties go to the smallest label.
pub(crate) fn majority(votes: &[usize]) -> usize {
    let mut best = 0;
    for (label, &count) in votes.iter().enumerate() {
        if count > votes[best] {
            best = label;
        }
    }
    best
}
