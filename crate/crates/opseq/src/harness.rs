//! End-to-end experiments: filtering, per-sample features, stratified
//! splits, classifier training and evaluation, grids and robustness runs.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use opseq_core::classify::{
    knn_operating_k, ClassifierParams, Dataset, MaxFeatures, NnParams, Optimizer, RfParams, SvmParams,
    TrainedClassifier, TrainingCurves,
};
use opseq_core::corpus::{
    build_vocabulary, filter_sequence, scramble, MnemonicSequence, OpcodeSequence, Vocabulary, MIN_ADMITTED_LEN,
};
use opseq_core::embed::Word2VecParams;
use opseq_core::eval::{stratified_split, ConfusionMatrix};
use opseq_core::hmm::{BaumWelchConfig, RestartPolicy, StateOrdering};
use opseq_core::rng::{self, derive_seed, hash_str};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, StageExt};
use crate::features::{compute_features, FeatureKind, FeatureSpec};
use crate::io;
use crate::report::{classifier_label, GridRow, PartitionSizes, Report, RobustnessReport, RobustnessSeries, Timing};

const STREAM_SPLIT: u64 = 0x73706c;
const STREAM_SCRAMBLE: u64 = 0x736372;

fn default_split() -> Vec<f64> {
    vec![0.7, 0.3]
}

/// One experiment, as read from a JSON config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub manifest: PathBuf,
    pub feature: FeatureKind,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n: usize,
    /// Word2Vec window; required for word2vec features.
    #[serde(rename = "W", default, skip_serializing_if = "Option::is_none")]
    pub w: Option<usize>,
    #[serde(default)]
    pub restarts: RestartPolicy,
    #[serde(default)]
    pub baum_welch: BaumWelchConfig,
    #[serde(default)]
    pub state_ordering: StateOrdering,
    #[serde(default)]
    pub word2vec: Word2VecParams,
    pub classifier: ClassifierParams,
    /// `[train, test]` or `[train, validation, test]`.
    #[serde(default = "default_split")]
    pub split: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scramble_fraction: Option<f64>,
}

impl ExperimentConfig {
    /// Reads a config; a relative manifest path is taken relative to the
    /// config file.
    pub fn load(path: &Path) -> Result<Self> {
        let mut config: Self = io::read_json(path)?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        config.manifest = io::resolve(&base, &config.manifest);
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if !(2..=3).contains(&self.split.len()) {
            return bad(format!("split needs 2 or 3 fractions, got {}", self.split.len()));
        }
        if self.split.iter().any(|f| !(*f > 0.0)) || (self.split.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!(
                "split fractions {:?} must be positive and sum to 1",
                self.split
            ));
        }
        if self.m == 0 || self.n == 0 {
            return bad("M and N must be positive".into());
        }
        if self.feature == FeatureKind::Word2vec && !self.w.is_some_and(|w| w > 0) {
            return bad("word2vec features need a positive window W".into());
        }
        if let Some(f) = self.scramble_fraction {
            if !(0.0..=1.0).contains(&f) {
                return bad(format!("scramble fraction {f} not in [0, 1]"));
            }
        }
        self.restarts.validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn feature_spec(&self) -> FeatureSpec {
        match self.feature {
            FeatureKind::Hmm2vec => FeatureSpec::Hmm2Vec {
                n: self.n,
                restarts: self.restarts,
                baum_welch: self.baum_welch,
                ordering: self.state_ordering,
            },
            FeatureKind::Word2vec => FeatureSpec::Word2Vec {
                n: self.n,
                window: self.w.unwrap_or(1),
                params: self.word2vec,
            },
        }
    }

    /// Applies a grid point's overrides.
    pub fn with_point(&self, point: &GridPoint) -> Self {
        let mut c = self.clone();
        c.m = point.m.unwrap_or(c.m);
        c.n = point.n.unwrap_or(c.n);
        c.w = point.w.or(c.w);
        if let Some(cl) = &point.classifier {
            c.classifier = cl.clone();
        }
        c
    }
}

/// Labeled raw sequences; labels index `families`.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub families: Vec<String>,
    pub sequences: Vec<MnemonicSequence>,
    pub labels: Vec<usize>,
}

impl Corpus {
    pub fn new(families: Vec<String>, sequences: Vec<MnemonicSequence>) -> Result<Self> {
        let labels = sequences
            .iter()
            .map(|s| {
                families
                    .iter()
                    .position(|f| *f == s.family)
                    .ok_or_else(|| Error::Config(format!("sample {} has unknown family {}", s.sample_id, s.family)))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            families,
            sequences,
            labels,
        })
    }

    pub fn load(manifest: &Path) -> Result<Self> {
        let (manifest, sequences) = io::load_corpus(manifest)?;
        Self::new(manifest.families, sequences)
    }
}

/// Vocabulary-filtered corpus. `ids[i]` is `None` for skipped samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Filtered {
    pub vocab: Vocabulary,
    pub ids: Vec<Option<OpcodeSequence>>,
    pub skipped: Vec<String>,
}

impl Filtered {
    pub fn admitted(&self) -> impl Iterator<Item = (usize, &OpcodeSequence)> {
        self.ids
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.as_ref().map(|s| (i, s)))
    }
}

/// Seed of one sample's scramble block.
pub fn scramble_seed(seed: u64, sample_id: &str) -> u64 {
    derive_seed(derive_seed(seed, STREAM_SCRAMBLE), hash_str(sample_id))
}

/// Builds the top-`m` vocabulary, filters every sample, drops samples
/// shorter than [`MIN_ADMITTED_LEN`] and optionally scrambles the rest.
pub fn filter_corpus(corpus: &Corpus, m: usize, scramble_fraction: Option<f64>, seed: u64) -> Result<Filtered> {
    let vocab = build_vocabulary(&corpus.sequences, m).stage("vocabulary", None)?;
    let mut skipped = Vec::new();
    let mut ids = Vec::with_capacity(corpus.sequences.len());
    for seq in &corpus.sequences {
        let kept = match filter_sequence(seq, &vocab) {
            Ok(f) if f.len() >= MIN_ADMITTED_LEN => Some(f),
            Ok(f) => {
                warn!("skipping {}: {} opcodes after filtering", seq.sample_id, f.len());
                None
            }
            Err(opseq_core::Error::EmptyAfterFilter { .. }) => {
                warn!("skipping {}: no opcodes after filtering", seq.sample_id);
                None
            }
            Err(e) => return Err(e).stage("filter", Some(&seq.sample_id)),
        };
        if kept.is_none() {
            skipped.push(seq.sample_id.clone());
        }
        ids.push(kept.map(|mut f| {
            if let Some(fraction) = scramble_fraction {
                f.ids = scramble(&f.ids, fraction, scramble_seed(seed, &f.sample_id));
            }
            f
        }));
    }
    Ok(Filtered { vocab, ids, skipped })
}

/// Stratified partitions of corpus indices.
pub fn split_corpus(corpus: &Corpus, fractions: &[f64], seed: u64) -> Result<Vec<Vec<usize>>> {
    stratified_split(&corpus.labels, fractions, derive_seed(seed, STREAM_SPLIT)).stage("split", None)
}

/// Features indexed like the corpus; `None` for skipped samples.
pub fn corpus_features(filtered: &Filtered, spec: &FeatureSpec, seed: u64) -> Result<Vec<Option<Vec<f64>>>> {
    let (index, seqs): (Vec<usize>, Vec<OpcodeSequence>) = filtered.admitted().map(|(i, s)| (i, s.clone())).unzip();
    let features = compute_features(&seqs, &filtered.vocab, spec, seed)?;
    let mut out = vec![None; filtered.ids.len()];
    for (i, f) in index.into_iter().zip(features) {
        out[i] = Some(f.values);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    pub curves: Option<TrainingCurves>,
    pub partitions: PartitionSizes,
    pub feature_dim: usize,
    pub train_secs: f64,
    pub evaluate_secs: f64,
}

fn dataset(
    indices: &[usize],
    features: &[Option<Vec<f64>>],
    labels: &[usize],
    classes: usize,
) -> Result<Option<Dataset>> {
    let (rows, ls): (Vec<Vec<f64>>, Vec<usize>) = indices
        .iter()
        .filter_map(|&i| features[i].clone().map(|f| (f, labels[i])))
        .unzip();
    if rows.is_empty() {
        return Ok(None);
    }
    Dataset::new(&rows, ls, classes).stage("dataset", None).map(Some)
}

/// Trains on the first partition (plus the validation partition for
/// everything but the neural network) and scores the last one.
pub fn evaluate(
    features: &[Option<Vec<f64>>],
    labels: &[usize],
    classes: usize,
    partitions: &[Vec<usize>],
    classifier: &ClassifierParams,
) -> Result<Evaluation> {
    let is_nn = matches!(classifier, ClassifierParams::Nn(_));
    let (train_idx, val_idx): (Vec<usize>, Vec<usize>) = match partitions {
        [train, _] => (train.clone(), Vec::new()),
        [train, val, _] if is_nn => (train.clone(), val.clone()),
        [train, val, _] => ([train.as_slice(), val.as_slice()].concat(), Vec::new()),
        _ => return Err(Error::Config("split needs 2 or 3 partitions".into())),
    };
    let test_idx = partitions.last().expect("checked above");
    let train = dataset(&train_idx, features, labels, classes)?
        .ok_or_else(|| Error::Config("training partition is empty".into()))?;
    let validation = dataset(&val_idx, features, labels, classes)?;
    let test = dataset(test_idx, features, labels, classes)?;

    let started = Instant::now();
    let model = TrainedClassifier::train(classifier, &train, validation.as_ref()).stage("train", None)?;
    let train_secs = started.elapsed().as_secs_f64();

    let started = Instant::now();
    let mut confusion = ConfusionMatrix::new(classes);
    if let Some(test) = &test {
        for i in 0..test.len() {
            confusion.record(test.label(i), model.predict(test.row(i)).stage("predict", None)?);
        }
    }
    let curves = match &model {
        TrainedClassifier::Nn(net) => Some(net.curves.clone()),
        _ => None,
    };
    Ok(Evaluation {
        confusion,
        curves,
        partitions: PartitionSizes {
            train: train.len(),
            validation: validation.as_ref().map_or(0, Dataset::len),
            test: test.as_ref().map_or(0, Dataset::len),
        },
        feature_dim: train.dim(),
        train_secs,
        evaluate_secs: started.elapsed().as_secs_f64(),
    })
}

fn build_report(
    config: &ExperimentConfig,
    corpus: &Corpus,
    filtered: &Filtered,
    eval: Evaluation,
    timing: Timing,
) -> Report {
    Report {
        config: config.clone(),
        families: corpus.families.clone(),
        vocabulary: filtered.vocab.mnemonics().to_vec(),
        samples: corpus.sequences.len() - filtered.skipped.len(),
        skipped: filtered.skipped.clone(),
        feature_dim: eval.feature_dim,
        partitions: eval.partitions,
        accuracy: eval.confusion.accuracy(),
        per_class_accuracy: eval.confusion.per_class_accuracy(),
        confusion: eval.confusion,
        curves: eval.curves,
        grid: None,
        timing,
    }
}

/// Runs one experiment on an already-loaded corpus; `config.manifest` is
/// only echoed.
pub fn run_experiment_on(corpus: &Corpus, config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let total = Instant::now();
    let started = Instant::now();
    let filtered = filter_corpus(corpus, config.m, config.scramble_fraction, config.seed)?;
    let filter_secs = started.elapsed().as_secs_f64();
    let partitions = split_corpus(corpus, &config.split, config.seed)?;

    let started = Instant::now();
    let features = corpus_features(&filtered, &config.feature_spec(), config.seed)?;
    let features_secs = started.elapsed().as_secs_f64();
    let eval = evaluate(
        &features,
        &corpus.labels,
        corpus.families.len(),
        &partitions,
        &config.classifier,
    )?;
    let timing = Timing {
        filter_secs,
        features_secs,
        train_secs: eval.train_secs,
        evaluate_secs: eval.evaluate_secs,
        total_secs: total.elapsed().as_secs_f64(),
    };
    info!(
        "{}: accuracy {:.4}",
        classifier_label(&config.classifier),
        eval.confusion.accuracy()
    );
    Ok(build_report(config, corpus, &filtered, eval, timing))
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<Report> {
    config.validate()?;
    let corpus = Corpus::load(&config.manifest)?;
    run_experiment_on(&corpus, config)
}

/// Overrides applied to the base config for one grid row.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridPoint {
    #[serde(rename = "M", default, skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(rename = "N", default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(rename = "W", default, skip_serializing_if = "Option::is_none")]
    pub w: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classifier: Option<ClassifierParams>,
}

/// Hyperparameter space of the randomized forest search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RfSearchSpace {
    pub n_estimators: Vec<usize>,
    pub min_samples_split: Vec<usize>,
    pub min_samples_leaf: Vec<usize>,
    pub max_features: Vec<MaxFeatures>,
    pub max_depth: Vec<Option<usize>>,
    pub bootstrap: Vec<bool>,
}

impl Default for RfSearchSpace {
    fn default() -> Self {
        Self {
            n_estimators: vec![200, 400, 600, 800, 1000, 1200, 1400],
            min_samples_split: vec![2, 5, 10],
            min_samples_leaf: vec![1, 2, 4],
            max_features: vec![MaxFeatures::Auto, MaxFeatures::All],
            max_depth: vec![Some(10), Some(20), Some(30), Some(40), Some(50), None],
            bootstrap: vec![true, false],
        }
    }
}

impl RfSearchSpace {
    fn size(&self) -> usize {
        self.n_estimators.len()
            * self.min_samples_split.len()
            * self.min_samples_leaf.len()
            * self.max_features.len()
            * self.max_depth.len()
            * self.bootstrap.len()
    }

    fn point(&self, mut index: usize, seed: u64) -> RfParams {
        let mut pick = |len: usize| {
            let i = index % len;
            index /= len;
            i
        };
        RfParams {
            n_estimators: self.n_estimators[pick(self.n_estimators.len())],
            min_samples_split: self.min_samples_split[pick(self.min_samples_split.len())],
            min_samples_leaf: self.min_samples_leaf[pick(self.min_samples_leaf.len())],
            max_features: self.max_features[pick(self.max_features.len())],
            max_depth: self.max_depth[pick(self.max_depth.len())],
            bootstrap: self.bootstrap[pick(self.bootstrap.len())],
            seed,
        }
    }

    /// `budget` distinct combinations drawn uniformly without replacement.
    pub fn sample(&self, budget: usize, seed: u64, forest_seed: u64) -> Result<Vec<RfParams>> {
        let size = self.size();
        if size == 0 {
            return Err(Error::Config("randomized search space is empty".into()));
        }
        let mut indices: Vec<usize> = (0..size).collect();
        indices.shuffle(&mut rng::rng(seed));
        Ok(indices
            .into_iter()
            .take(budget)
            .map(|i| self.point(i, forest_seed))
            .collect())
    }
}

fn default_max_k() -> usize {
    100
}

fn default_budget() -> usize {
    50
}

/// Named grids for the standard experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum Preset {
    /// Linear `C ∈ {1, 10, 100, 1000}` and RBF over the same `C` with
    /// `γ ∈ {0.001, 0.0001}`: 12 rows.
    Svm,
    /// `k = 1..=max_k` (capped at the training-set size) with the
    /// `k ≈ √S` row flagged.
    Knn {
        #[serde(default = "default_max_k")]
        max_k: usize,
    },
    /// `N ∈ {2, 31, 100}` × `W ∈ {1, 5, 10, 30, 100}`.
    Word2vecSweep,
    /// `M ∈ {20, 31, 40}` × `W ∈ {1, 5, 10, 30, 100}` at `N = 2`.
    OpcodeCount,
    /// Seeded randomized search over a forest hyperparameter space.
    RfRandom {
        #[serde(default = "default_budget")]
        budget: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default)]
        space: RfSearchSpace,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Points { points: Vec<GridPoint> },
    Preset(Preset),
}

pub const SVM_C: [f64; 4] = [1.0, 10.0, 100.0, 1000.0];
pub const SVM_GAMMA: [f64; 2] = [0.001, 0.0001];
pub const W2V_N: [usize; 3] = [2, 31, 100];
pub const W2V_W: [usize; 5] = [1, 5, 10, 30, 100];
pub const OPCODE_COUNTS: [usize; 3] = [20, 31, 40];

pub fn svm_grid() -> Vec<GridPoint> {
    let linear = SVM_C.iter().map(|&c| SvmParams::linear(c));
    let rbf = SVM_C
        .iter()
        .flat_map(|&c| SVM_GAMMA.iter().map(move |&g| SvmParams::rbf(c, g)));
    linear
        .chain(rbf)
        .map(|p| GridPoint {
            classifier: Some(ClassifierParams::Svm(p)),
            ..Default::default()
        })
        .collect()
}

pub fn knn_grid(max_k: usize) -> Vec<GridPoint> {
    (1..=max_k)
        .map(|k| GridPoint {
            classifier: Some(ClassifierParams::Knn { k }),
            ..Default::default()
        })
        .collect()
}

pub fn word2vec_sweep() -> Vec<GridPoint> {
    W2V_N
        .iter()
        .flat_map(|&n| {
            W2V_W.iter().map(move |&w| GridPoint {
                n: Some(n),
                w: Some(w),
                ..Default::default()
            })
        })
        .collect()
}

pub fn opcode_count_sweep() -> Vec<GridPoint> {
    OPCODE_COUNTS
        .iter()
        .flat_map(|&m| {
            W2V_W.iter().map(move |&w| GridPoint {
                m: Some(m),
                n: Some(2),
                w: Some(w),
                ..Default::default()
            })
        })
        .collect()
}

impl GridSpec {
    /// The concrete grid points; `train_size` caps the kNN sweep.
    pub fn expand(&self, train_size: usize) -> Result<Vec<GridPoint>> {
        let points = match self {
            GridSpec::Points { points } => points.clone(),
            GridSpec::Preset(Preset::Svm) => svm_grid(),
            GridSpec::Preset(Preset::Knn { max_k }) => knn_grid((*max_k).min(train_size)),
            GridSpec::Preset(Preset::Word2vecSweep) => word2vec_sweep(),
            GridSpec::Preset(Preset::OpcodeCount) => opcode_count_sweep(),
            GridSpec::Preset(Preset::RfRandom { budget, seed, space }) => space
                .sample(*budget, *seed, 0)?
                .into_iter()
                .map(|p| GridPoint {
                    classifier: Some(ClassifierParams::Rf(p)),
                    ..Default::default()
                })
                .collect(),
        };
        if points.is_empty() {
            return Err(Error::Config("grid is empty".into()));
        }
        Ok(points)
    }

    /// Presets that sweep feature parameters need word2vec features.
    fn needs_word2vec(&self) -> bool {
        matches!(self, GridSpec::Preset(Preset::Word2vecSweep | Preset::OpcodeCount))
    }
}

/// Runs every grid point on one shared split. Rows are sorted by
/// accuracy, descending; ties keep grid order. The top-level fields of the
/// report describe the best row.
pub fn grid_search_on(corpus: &Corpus, config: &ExperimentConfig, spec: &GridSpec) -> Result<Report> {
    config.validate()?;
    if spec.needs_word2vec() && config.feature != FeatureKind::Word2vec {
        return Err(Error::Config("this preset sweeps word2vec parameters".into()));
    }
    let total = Instant::now();
    let partitions = split_corpus(corpus, &config.split, config.seed)?;
    let train_size = partitions[0].len();
    let points = spec.expand(train_size)?;

    let mut filtered_by_m: BTreeMap<usize, Filtered> = BTreeMap::new();
    let mut features_by_shape: BTreeMap<(usize, usize, Option<usize>), Vec<Option<Vec<f64>>>> = BTreeMap::new();
    let mut timing = Timing::default();
    let mut rows = Vec::with_capacity(points.len());
    let mut best: Option<(f64, ExperimentConfig, Evaluation)> = None;

    for point in &points {
        let run = config.with_point(point);
        run.validate()?;
        if let Entry::Vacant(slot) = filtered_by_m.entry(run.m) {
            let started = Instant::now();
            slot.insert(filter_corpus(corpus, run.m, run.scramble_fraction, run.seed)?);
            timing.filter_secs += started.elapsed().as_secs_f64();
        }
        let filtered = &filtered_by_m[&run.m];
        let key = (run.m, run.n, run.w);
        if let Entry::Vacant(slot) = features_by_shape.entry(key) {
            let started = Instant::now();
            slot.insert(corpus_features(filtered, &run.feature_spec(), run.seed)?);
            timing.features_secs += started.elapsed().as_secs_f64();
        }
        let eval = evaluate(
            &features_by_shape[&key],
            &corpus.labels,
            corpus.families.len(),
            &partitions,
            &run.classifier,
        )?;
        timing.train_secs += eval.train_secs;
        timing.evaluate_secs += eval.evaluate_secs;
        let accuracy = eval.confusion.accuracy();
        info!("grid {:?}: accuracy {accuracy:.4}", point);
        let operating_point = matches!(run.classifier, ClassifierParams::Knn { k } if k == knn_operating_k(train_size));
        rows.push(GridRow {
            point: GridPoint {
                m: Some(run.m),
                n: Some(run.n),
                w: run.w,
                classifier: Some(run.classifier.clone()),
            },
            accuracy,
            confusion: eval.confusion.clone(),
            best: false,
            operating_point,
        });
        if best.as_ref().is_none_or(|(a, _, _)| accuracy > *a) {
            best = Some((accuracy, run, eval));
        }
    }
    rows.sort_by(|a, b| b.accuracy.total_cmp(&a.accuracy));
    rows[0].best = true;
    timing.total_secs = total.elapsed().as_secs_f64();

    let (_, best_config, best_eval) = best.expect("grid is non-empty");
    let filtered = &filtered_by_m[&best_config.m];
    let mut report = build_report(&best_config, corpus, filtered, best_eval, timing);
    report.config = config.clone();
    report.grid = Some(rows);
    Ok(report)
}

pub fn grid_search(config: &ExperimentConfig, spec: &GridSpec) -> Result<Report> {
    config.validate()?;
    let corpus = Corpus::load(&config.manifest)?;
    grid_search_on(&corpus, config, spec)
}

/// One classifier of each kind, sized for desk-scale robustness runs.
pub fn robustness_presets(train_size: usize) -> Vec<ClassifierParams> {
    vec![
        ClassifierParams::Knn {
            k: knn_operating_k(train_size).max(1),
        },
        ClassifierParams::Svm(SvmParams::linear(100.0)),
        ClassifierParams::Rf(RfParams {
            n_estimators: 100,
            ..RfParams::default()
        }),
        ClassifierParams::Nn(NnParams {
            layer_sizes: vec![0, 20, 200, 0],
            optimizer: Optimizer::adam(1e-3),
            ..NnParams::new(vec![], 50)
        }),
    ]
}

/// Re-runs the pipeline at each scramble fraction, for each classifier,
/// on one shared split.
pub fn robustness_study_on(
    corpus: &Corpus,
    config: &ExperimentConfig,
    fractions: &[f64],
    classifiers: &[ClassifierParams],
) -> Result<RobustnessReport> {
    config.validate()?;
    if fractions.is_empty() || classifiers.is_empty() {
        return Err(Error::Config("need at least one fraction and one classifier".into()));
    }
    if let Some(f) = fractions.iter().find(|f| !(0.0..=1.0).contains(*f)) {
        return Err(Error::Config(format!("scramble fraction {f} not in [0, 1]")));
    }
    let partitions = split_corpus(corpus, &config.split, config.seed)?;
    let mut series: Vec<RobustnessSeries> = classifiers
        .iter()
        .map(|c| RobustnessSeries {
            classifier: c.clone(),
            label: classifier_label(c),
            accuracies: Vec::with_capacity(fractions.len()),
        })
        .collect();
    let mut timing = Vec::with_capacity(fractions.len());
    for &fraction in fractions {
        let total = Instant::now();
        let mut t = Timing::default();
        let started = Instant::now();
        let filtered = filter_corpus(corpus, config.m, Some(fraction), config.seed)?;
        t.filter_secs = started.elapsed().as_secs_f64();
        let started = Instant::now();
        let features = corpus_features(&filtered, &config.feature_spec(), config.seed)?;
        t.features_secs = started.elapsed().as_secs_f64();
        for s in &mut series {
            let eval = evaluate(
                &features,
                &corpus.labels,
                corpus.families.len(),
                &partitions,
                &s.classifier,
            )?;
            t.train_secs += eval.train_secs;
            t.evaluate_secs += eval.evaluate_secs;
            info!(
                "scramble {fraction}: {} accuracy {:.4}",
                s.label,
                eval.confusion.accuracy()
            );
            s.accuracies.push(eval.confusion.accuracy());
        }
        t.total_secs = total.elapsed().as_secs_f64();
        timing.push(t);
    }
    Ok(RobustnessReport {
        config: config.clone(),
        families: corpus.families.clone(),
        fractions: fractions.to_vec(),
        series,
        timing,
    })
}

pub fn robustness_study(
    config: &ExperimentConfig,
    fractions: &[f64],
    classifiers: &[ClassifierParams],
) -> Result<RobustnessReport> {
    config.validate()?;
    let corpus = Corpus::load(&config.manifest)?;
    robustness_study_on(&corpus, config, fractions, classifiers)
}

/// `k` for the kNN rule `k ≈ √S` on this config's training partition.
pub fn operating_k(corpus: &Corpus, config: &ExperimentConfig) -> Result<usize> {
    Ok(knn_operating_k(
        split_corpus(corpus, &config.split, config.seed)?[0].len(),
    ))
}
