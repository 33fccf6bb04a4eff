use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use super::HmmModel;
use crate::corpus::Vocabulary;
use crate::{Error, FeatureVector, Provenance, Result};

/// Which model shapes [`hmm2vec_values`] accepts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum StateOrdering {
    /// Two hidden states only.
    #[default]
    TwoState,
    /// Any `N`, rows sorted by descending anchor probability.
    AnyN,
}

/// Hidden states ordered by descending `B[state][0]` (the anchor opcode).
/// Equal anchor probabilities fall back to comparing whole rows, so the
/// order depends only on the rows themselves and not on state labels.
pub fn state_order(model: &HmmModel) -> Vec<usize> {
    let mut order: Vec<usize> = (0..model.n_states()).collect();
    order.sort_by(|&s, &t| {
        let (rs, rt) = (model.emission_row(s), model.emission_row(t));
        rt[0].total_cmp(&rs[0]).then_with(|| {
            rt.iter()
                .zip(rs)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| *o != Ordering::Equal)
                .unwrap_or(Ordering::Equal)
        })
    });
    order
}

/// Concatenates the rows of `B`, anchor-emitting state first.
pub fn hmm2vec_values(model: &HmmModel, vocab: &Vocabulary, ordering: StateOrdering) -> Result<Vec<f64>> {
    if model.n_symbols() != vocab.size() {
        return Err(Error::Dimension {
            expected: vocab.size(),
            got: model.n_symbols(),
        });
    }
    if ordering == StateOrdering::TwoState && model.n_states() != 2 {
        return Err(Error::UnsupportedShape(format!(
            "HMM2Vec expects 2 hidden states, model has {}",
            model.n_states()
        )));
    }
    Ok(state_order(model)
        .into_iter()
        .flat_map(|s| model.emission_row(s).iter().copied())
        .collect())
}

/// HMM2Vec feature vector of length `N·M` for one sample.
pub fn hmm2vec(
    model: &HmmModel,
    vocab: &Vocabulary,
    ordering: StateOrdering,
    sample_id: impl Into<String>,
    family: impl Into<String>,
) -> Result<FeatureVector> {
    Ok(FeatureVector {
        sample_id: sample_id.into(),
        family: family.into(),
        provenance: Provenance::Hmm2Vec,
        values: hmm2vec_values(model, vocab, ordering)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn vocab(m: usize) -> Vocabulary {
        Vocabulary::from_ranked((0..m).map(|i| format!("op{i}")).collect(), vec![0.0; m]).unwrap()
    }

    #[test]
    fn anchor_row_goes_first() {
        let model = HmmModel::from_rows(
            &[vec![0.5, 0.5], vec![0.5, 0.5]],
            &[vec![0.2, 0.8], vec![0.7, 0.3]],
            &[0.5, 0.5],
        )
        .unwrap();
        let v = hmm2vec_values(&model, &vocab(2), StateOrdering::TwoState).unwrap();
        assert_eq!(v, vec![0.7, 0.3, 0.2, 0.8]);
        let swapped = model.permute_states(&[1, 0]).unwrap();
        assert_eq!(hmm2vec_values(&swapped, &vocab(2), StateOrdering::TwoState).unwrap(), v);
    }

    #[test]
    fn equal_anchor_probabilities_use_whole_rows() {
        let model = HmmModel::from_rows(
            &[vec![0.5, 0.5], vec![0.5, 0.5]],
            &[vec![0.5, 0.1, 0.4], vec![0.5, 0.4, 0.1]],
            &[0.5, 0.5],
        )
        .unwrap();
        let v = hmm2vec_values(&model, &vocab(3), StateOrdering::TwoState).unwrap();
        let swapped = model.permute_states(&[1, 0]).unwrap();
        assert_eq!(hmm2vec_values(&swapped, &vocab(3), StateOrdering::TwoState).unwrap(), v);
        assert_eq!(v, vec![0.5, 0.4, 0.1, 0.5, 0.1, 0.4]);
    }

    #[test]
    fn shape_checks() {
        let three = HmmModel::from_rows(
            &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]],
            &[vec![0.1, 0.9], vec![0.8, 0.2], vec![0.5, 0.5]],
            &[1.0, 0.0, 0.0],
        )
        .unwrap();
        assert!(matches!(
            hmm2vec_values(&three, &vocab(2), StateOrdering::TwoState),
            Err(Error::UnsupportedShape(_))
        ));
        assert_eq!(
            hmm2vec_values(&three, &vocab(2), StateOrdering::AnyN).unwrap(),
            vec![0.8, 0.2, 0.5, 0.5, 0.1, 0.9]
        );
        assert!(matches!(
            hmm2vec_values(&three, &vocab(3), StateOrdering::AnyN),
            Err(Error::Dimension { .. })
        ));
    }
}
