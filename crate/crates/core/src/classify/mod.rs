//! Supervised classifiers over engineered feature vectors.

mod dataset;
pub mod forest;
pub mod knn;
pub mod nn;
pub mod svm;

pub use dataset::Dataset;
pub use forest::{rf_train, MaxFeatures, RandomForest, RfParams};
pub use knn::{knn_operating_k, knn_predict, Knn};
pub use nn::{nn_train, Activation, Loss, NeuralNet, NnParams, Optimizer, TrainingCurves};
pub use svm::{svm_predict_multiclass, svm_train, svm_train_ovr, BinarySvm, Kernel, OvrSvm, SvmParams};

use crate::Result;

/// Hyperparameters for one of the four classifier kinds.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "algo", rename_all = "lowercase"))]
pub enum ClassifierParams {
    Knn { k: usize },
    Svm(SvmParams),
    Rf(RfParams),
    Nn(NnParams),
}

impl ClassifierParams {
    pub fn kind(&self) -> &'static str {
        match self {
            ClassifierParams::Knn { .. } => "knn",
            ClassifierParams::Svm(_) => "svm",
            ClassifierParams::Rf(_) => "rf",
            ClassifierParams::Nn(_) => "nn",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum TrainedClassifier {
    Knn(Knn),
    Svm(OvrSvm),
    Rf(RandomForest),
    Nn(NeuralNet),
}

impl TrainedClassifier {
    /// Trains the classifier described by `params`. Only the neural network
    /// looks at `validation`; it is used for its per-epoch curves.
    pub fn train(params: &ClassifierParams, data: &Dataset, validation: Option<&Dataset>) -> Result<Self> {
        Ok(match params {
            ClassifierParams::Knn { k } => TrainedClassifier::Knn(Knn::new(data.clone(), *k)?),
            ClassifierParams::Svm(p) => TrainedClassifier::Svm(svm_train_ovr(data, p)?),
            ClassifierParams::Rf(p) => TrainedClassifier::Rf(rf_train(data, p)?),
            ClassifierParams::Nn(p) => TrainedClassifier::Nn(nn_train(data, validation, p)?),
        })
    }

    pub fn predict(&self, query: &[f64]) -> Result<usize> {
        match self {
            TrainedClassifier::Knn(m) => m.predict(query),
            TrainedClassifier::Svm(m) => m.predict(query),
            TrainedClassifier::Rf(m) => m.predict(query),
            TrainedClassifier::Nn(m) => m.predict(query),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            TrainedClassifier::Knn(m) => m.train.dim(),
            TrainedClassifier::Svm(m) => m.dim,
            TrainedClassifier::Rf(m) => m.dim,
            TrainedClassifier::Nn(m) => m.input_dim(),
        }
    }
}
