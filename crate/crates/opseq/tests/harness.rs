use opseq::features::FeatureKind;
use opseq::harness::*;
use opseq::io;
use opseq::report::{confusion_csv, to_json, to_json_without_timing, Format, Report};
use opseq::synth::{PlantedDef, SynthSpec};
use opseq_core::classify::{knn_operating_k, ClassifierParams, Kernel, NnParams, Optimizer, RfParams, SvmParams};
use opseq_core::eval::ConfusionMatrix;
use opseq_core::hmm::RestartPolicy;

fn corpus(families: usize, per_family: usize, lengths: (usize, usize)) -> Corpus {
    let spec = SynthSpec {
        families: vec![],
        planted: Some(PlantedDef {
            count: families,
            min_distance: 0.4,
            seed: 11,
        }),
        samples_per_family: per_family,
        length_range: lengths,
        seed: 12,
    };
    let (labels, seqs) = spec.generate().unwrap();
    Corpus::new(labels, seqs).unwrap()
}

fn config(feature: FeatureKind, classifier: ClassifierParams) -> ExperimentConfig {
    ExperimentConfig {
        manifest: "unused".into(),
        feature,
        m: 31,
        n: 2,
        w: (feature == FeatureKind::Word2vec).then_some(1),
        restarts: RestartPolicy::fixed(1),
        baum_welch: Default::default(),
        state_ordering: Default::default(),
        word2vec: Default::default(),
        classifier,
        split: vec![0.7, 0.3],
        seed: 21,
        scramble_fraction: None,
    }
}

#[test]
fn split_is_stratified_disjoint_and_exhaustive() {
    let c = corpus(3, 20, (50, 60));
    let parts = split_corpus(&c, &[0.7, 0.3], 1).unwrap();
    let mut all: Vec<usize> = parts.concat();
    all.sort_unstable();
    assert_eq!(all, (0..60).collect::<Vec<_>>());
    for f in 0..3 {
        assert_eq!(parts[0].iter().filter(|&&i| c.labels[i] == f).count(), 14);
        assert_eq!(parts[1].iter().filter(|&&i| c.labels[i] == f).count(), 6);
    }
    let three = split_corpus(&c, &[0.8, 0.1, 0.1], 1).unwrap();
    assert_eq!(three.iter().map(Vec::len).collect::<Vec<_>>(), [48, 6, 6]);
    assert_eq!(split_corpus(&c, &[0.7, 0.3], 1).unwrap(), parts);
}

#[test]
fn confusion_rows_match_test_counts_and_reports_round_trip() {
    let c = corpus(3, 20, (80, 120));
    let r = run_experiment_on(&c, &config(FeatureKind::Word2vec, ClassifierParams::Knn { k: 3 })).unwrap();
    assert_eq!(r.confusion.row_sums(), [6, 6, 6]);
    assert_eq!(r.accuracy, r.confusion.correct() as f64 / r.confusion.total() as f64);
    assert_eq!(r.feature_dim, 62);
    let back: Report = serde_json::from_str(&to_json(&r)).unwrap();
    assert_eq!(back, r);
    assert_eq!(r.render(Format::Csv).lines().count(), 4);
    assert!(r.render(Format::Text).contains("family2"));
}

#[test]
fn two_class_matrix_accuracy_and_csv() {
    let m = ConfusionMatrix {
        classes: 2,
        counts: vec![vec![3, 1], vec![0, 4]],
    };
    assert_eq!(m.accuracy(), 0.875);
    let csv = confusion_csv(&["a".into(), "b".into()], &m);
    assert_eq!(csv, "family,a,b,accuracy\na,3,1,0.75\nb,0,4,1\n");
}

#[test]
fn zero_scramble_matches_unscrambled_run() {
    let c = corpus(2, 15, (100, 150));
    for feature in [FeatureKind::Hmm2vec, FeatureKind::Word2vec] {
        let base = config(feature, ClassifierParams::Svm(SvmParams::linear(10.0)));
        let scrambled = ExperimentConfig {
            scramble_fraction: Some(0.0),
            ..base.clone()
        };
        let mut a = run_experiment_on(&c, &base).unwrap();
        let mut b = run_experiment_on(&c, &scrambled).unwrap();
        a.config = scrambled.clone();
        b.config = scrambled;
        assert_eq!(to_json_without_timing(&a), to_json_without_timing(&b));
    }
}

#[test]
fn short_samples_are_skipped() {
    let mut c = corpus(2, 10, (60, 80));
    c.sequences[3].mnemonics.truncate(5);
    c.sequences[4].mnemonics = (0..40).map(|i| format!("rare{i}")).collect();
    let f = filter_corpus(&c, 31, None, 0).unwrap();
    assert_eq!(f.skipped.len(), 2);
    assert!(f.ids[3].is_none() && f.ids[4].is_none());
    let r = run_experiment_on(&c, &config(FeatureKind::Word2vec, ClassifierParams::Knn { k: 1 })).unwrap();
    assert_eq!(r.samples, 18);
    assert_eq!(r.partitions.train + r.partitions.test, 18);
}

#[test]
fn grid_of_one_equals_single_run_and_best_row_dominates() {
    let c = corpus(3, 12, (80, 100));
    let base = config(FeatureKind::Word2vec, ClassifierParams::Knn { k: 1 });
    let single = run_experiment_on(&c, &base).unwrap();
    let one = GridSpec::Points {
        points: vec![GridPoint::default()],
    };
    let g = grid_search_on(&c, &base, &one).unwrap();
    let rows = g.grid.as_ref().unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].accuracy, single.accuracy);
    assert_eq!(rows[0].confusion, single.confusion);

    let sweep = grid_search_on(&c, &base, &GridSpec::Preset(Preset::Knn { max_k: 100 })).unwrap();
    let rows = sweep.grid.unwrap();
    let train = split_corpus(&c, &base.split, base.seed).unwrap()[0].len();
    assert_eq!(rows.len(), train.min(100));
    assert!(rows[0].best && rows.iter().skip(1).all(|r| !r.best));
    assert!(rows.iter().all(|r| r.accuracy <= rows[0].accuracy));
    assert!(rows.windows(2).all(|w| w[0].accuracy >= w[1].accuracy));
    let flagged: Vec<_> = rows.iter().filter(|r| r.operating_point).collect();
    assert_eq!(flagged.len(), 1);
    assert_eq!(
        flagged[0].point.classifier,
        Some(ClassifierParams::Knn {
            k: knn_operating_k(train)
        })
    );
    assert_eq!(sweep.accuracy, rows[0].accuracy);
}

#[test]
fn randomized_forest_search_draws_distinct_points() {
    let space = RfSearchSpace::default();
    let a = space.sample(50, 7, 0).unwrap();
    assert_eq!(a.len(), 50);
    for (i, p) in a.iter().enumerate() {
        assert!(a[..i].iter().all(|q| q != p));
        p.validate().unwrap();
    }
    assert_eq!(space.sample(50, 7, 0).unwrap(), a);
    assert_ne!(space.sample(50, 8, 0).unwrap(), a);
    let spec: GridSpec = serde_json::from_str(r#"{"preset": "rf_random", "budget": 5, "seed": 2}"#).unwrap();
    assert_eq!(spec.expand(100).unwrap().len(), 5);
}

#[test]
fn feature_sweeps_reject_hmm_configs() {
    let c = corpus(2, 6, (50, 60));
    let base = config(FeatureKind::Hmm2vec, ClassifierParams::Knn { k: 1 });
    let err = grid_search_on(&c, &base, &GridSpec::Preset(Preset::Word2vecSweep)).unwrap_err();
    assert_eq!(err.exit_code(), 1);
}

#[test]
fn nn_uses_validation_partition_and_records_curves() {
    let c = corpus(2, 20, (80, 100));
    let nn = ClassifierParams::Nn(NnParams {
        layer_sizes: vec![0, 8, 0],
        optimizer: Optimizer::adam(1e-2),
        dropout_rate: 0.0,
        ..NnParams::new(vec![], 5)
    });
    let mut cfg = config(FeatureKind::Word2vec, nn);
    cfg.split = vec![0.8, 0.1, 0.1];
    let r = run_experiment_on(&c, &cfg).unwrap();
    assert_eq!(
        (r.partitions.train, r.partitions.validation, r.partitions.test),
        (32, 4, 4)
    );
    let curves = r.curves.unwrap();
    assert_eq!(curves.train_loss.len(), 5);
    assert_eq!(curves.validation_accuracy.len(), 5);

    cfg.classifier = ClassifierParams::Knn { k: 1 };
    let r = run_experiment_on(&c, &cfg).unwrap();
    assert_eq!(
        (r.partitions.train, r.partitions.validation, r.partitions.test),
        (36, 0, 4)
    );
}

#[test]
fn robustness_series_shape() {
    let c = corpus(2, 10, (100, 120));
    let cfg = config(FeatureKind::Word2vec, ClassifierParams::Knn { k: 1 });
    let classifiers = vec![
        ClassifierParams::Knn { k: 3 },
        ClassifierParams::Rf(RfParams {
            n_estimators: 10,
            ..Default::default()
        }),
    ];
    let fractions = [0.0, 0.2, 0.4];
    let r = robustness_study_on(&c, &cfg, &fractions, &classifiers).unwrap();
    assert_eq!(r.series.len(), 2);
    assert!(r.series.iter().all(|s| s.accuracies.len() == 3));
    let baseline = run_experiment_on(
        &c,
        &ExperimentConfig {
            classifier: classifiers[0].clone(),
            ..cfg.clone()
        },
    )
    .unwrap();
    assert_eq!(r.series[0].accuracies[0], baseline.accuracy);
    assert_eq!(r.render(Format::Csv).lines().count(), 3);
}

#[test]
fn config_files_parse_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cfg.json");
    io::write_text(
        &path,
        r#"{"manifest": "corpus/manifest.json", "feature": "hmm2vec", "M": 31, "N": 2,
            "classifier": {"algo": "rf", "n_estimators": 1000, "max_depth": 50}}"#,
    )
    .unwrap();
    let cfg = ExperimentConfig::load(&path).unwrap();
    assert_eq!(cfg.manifest, dir.path().join("corpus/manifest.json"));
    assert_eq!(cfg.split, [0.7, 0.3]);
    assert_eq!(cfg.restarts, RestartPolicy::default());
    assert_eq!(cfg.classifier, ClassifierParams::Rf(RfParams::default()));

    io::write_text(
        &path,
        r#"{"manifest": "m.json", "feature": "word2vec", "M": 31, "N": 2, "classifier": {"algo": "knn", "k": 1}}"#,
    )
    .unwrap();
    assert_eq!(ExperimentConfig::load(&path).unwrap_err().exit_code(), 1);
    io::write_text(
        &path,
        r#"{"manifest": "m.json", "feature": "hmm2vec", "M": 31, "N": 2, "typo": 1}"#,
    )
    .unwrap();
    assert!(ExperimentConfig::load(&path).is_err());

    let adam: Optimizer = serde_json::from_str(r#"{"type": "adam", "lr": 0.001}"#).unwrap();
    assert_eq!(adam, Optimizer::adam(1e-3));

    let svm: ClassifierParams =
        serde_json::from_str(r#"{"algo": "svm", "kernel": {"type": "rbf", "gamma": 0.001}, "c": 1000}"#).unwrap();
    assert_eq!(svm, ClassifierParams::Svm(SvmParams::rbf(1000.0, 0.001)));
    assert!(matches!(
        svm,
        ClassifierParams::Svm(SvmParams {
            kernel: Kernel::Rbf { .. },
            ..
        })
    ));
}

#[test]
fn corpus_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let c = corpus(2, 3, (20, 30));
    let manifest = io::write_corpus(dir.path(), &c.families, &c.sequences).unwrap();
    let loaded = Corpus::load(&manifest).unwrap();
    assert_eq!(loaded, c);
}
