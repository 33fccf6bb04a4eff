mod support;

use opseq_core::classify::forest::{grow_tree, rf_train, MaxFeatures, Node, RfParams};
use opseq_core::classify::knn::knn_predict;
use opseq_core::classify::nn::{nn_train, Loss, NeuralNet, NnParams, Optimizer};
use opseq_core::classify::svm::{
    dual_objective, solve_dual, svm_predict_multiclass, svm_train, svm_train_ovr, Kernel, SvmParams,
};
use opseq_core::classify::Dataset;
use opseq_core::rng;
use rand::Rng as _;
use support::*;

fn kkt_violation(gram: &[f64], y: &[f64], c: f64, alpha: &[f64]) -> f64 {
    let n = y.len();
    let grad: Vec<f64> = (0..n)
        .map(|i| (0..n).map(|j| y[i] * y[j] * gram[i * n + j] * alpha[j]).sum::<f64>() - 1.0)
        .collect();
    let mut up = f64::NEG_INFINITY;
    let mut low = f64::INFINITY;
    for i in 0..n {
        let v = -y[i] * grad[i];
        if (y[i] > 0.0 && alpha[i] < c) || (y[i] < 0.0 && alpha[i] > 0.0) {
            up = up.max(v);
        }
        if (y[i] > 0.0 && alpha[i] > 0.0) || (y[i] < 0.0 && alpha[i] < c) {
            low = low.min(v);
        }
    }
    (up - low).max(0.0)
}

fn separable(seed: u64, n: usize) -> (Dataset, Vec<f64>) {
    let (rows, labels) = blobs(&[vec![-2.0, -2.0], vec![2.0, 2.0]], 0.7, n / 2, seed);
    let y = labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    (Dataset::new(&rows, labels, 2).unwrap(), y)
}

#[test]
fn knn_equals_brute_force() {
    let mut r = rng::rng(300);
    let rows: Vec<Vec<f64>> = (0..200)
        .map(|_| (0..3).map(|_| r.gen_range(-1.0..1.0)).collect())
        .collect();
    let labels: Vec<usize> = (0..200).map(|_| r.gen_range(0..4)).collect();
    let data = Dataset::new(&rows, labels.clone(), 4).unwrap();
    for _ in 0..1000 {
        let q: Vec<f64> = (0..3).map(|_| r.gen_range(-1.2..1.2)).collect();
        assert_eq!(
            knn_predict(&data, 7, &q).unwrap(),
            knn_brute_force(&rows, &labels, 4, 7, &q)
        );
    }
}

#[test]
fn svm_dual_meets_kkt_and_reference_objective() {
    for seed in 0..20 {
        let (data, y) = separable(seed, 50);
        for kernel in [Kernel::Linear, Kernel::Rbf { gamma: 0.5 }] {
            let gram = kernel.gram(&data);
            let c = 10.0;
            let sol = solve_dual(&gram, &y, c, 1e-3, 1_000_000).unwrap();
            let kkt = kkt_violation(&gram, &y, c, &sol.alpha);
            assert!(kkt <= 1e-3, "seed {seed}: KKT {kkt}");
            let ours = dual_objective(&gram, &y, &sol.alpha);
            let reference = reference_dual_objective(&gram, &y, c, 20_000);
            assert!(
                (ours - reference).abs() <= 1e-3,
                "seed {seed} {kernel:?}: {ours} vs {reference}"
            );
        }
    }
}

#[test]
fn linear_svm_duality_gap_is_small() {
    for seed in 0..5 {
        let (data, y) = separable(100 + seed, 60);
        let c = 1.0;
        let gram = Kernel::Linear.gram(&data);
        let sol = solve_dual(&gram, &y, c, 1e-3, 1_000_000).unwrap();
        let mut w = [0.0; 2];
        for i in 0..data.len() {
            for k in 0..2 {
                w[k] += sol.alpha[i] * y[i] * data.row(i)[k];
            }
        }
        let hinge: f64 = (0..data.len())
            .map(|i| (1.0 - y[i] * (w[0] * data.row(i)[0] + w[1] * data.row(i)[1] + sol.bias)).max(0.0))
            .sum();
        let primal = 0.5 * (w[0] * w[0] + w[1] * w[1]) + c * hinge;
        let dual = dual_objective(&gram, &y, &sol.alpha);
        let gap = (primal - dual) / primal.abs().max(1.0);
        assert!(gap >= -1e-9 && gap < 1e-2, "seed {seed}: gap {gap}");
    }
}

#[test]
fn linear_svm_scaling_invariance() {
    let (rows, labels) = blobs(&[vec![-1.0, 0.0], vec![1.0, 0.5], vec![0.0, 2.0]], 0.4, 30, 7);
    let data = Dataset::new(&rows, labels, 3).unwrap();
    let s = 3.0;
    let base = svm_train_ovr(&data, &SvmParams::linear(1.0)).unwrap();
    let scaled = svm_train_ovr(&data.scaled(s), &SvmParams::linear(1.0 / (s * s))).unwrap();
    let mut r = rng::rng(301);
    for _ in 0..200 {
        let q: Vec<f64> = (0..2).map(|_| r.gen_range(-2.0..2.5)).collect();
        let qs: Vec<f64> = q.iter().map(|v| v * s).collect();
        let a = base.decisions(&q).unwrap();
        let b = scaled.decisions(&qs).unwrap();
        for (x, z) in a.iter().zip(&b) {
            assert!((x - z).abs() < 0.05 * (1.0 + x.abs()), "{a:?} vs {b:?}");
        }
        assert_eq!(base.predict(&q).unwrap(), scaled.predict(&qs).unwrap());
    }
}

#[test]
fn svm_separates_three_blobs() {
    let centers = [vec![-4.0, 0.0], vec![4.0, 0.0], vec![0.0, 5.0]];
    let (rows, labels) = blobs(&centers, 0.5, 40, 8);
    let data = Dataset::new(&rows, labels, 3).unwrap();
    for params in [SvmParams::linear(100.0), SvmParams::rbf(10.0, 0.1)] {
        let ovr = svm_train_ovr(&data, &params).unwrap();
        let (test, test_labels) = blobs(&centers, 0.5, 40, 9);
        for (q, l) in test.iter().zip(&test_labels) {
            assert_eq!(ovr.predict(q).unwrap(), *l);
        }
    }
    let binary = svm_train(&data, 0, &SvmParams::linear(100.0)).unwrap();
    assert!(binary.support_count() >= 2);
}

#[test]
fn single_tree_reproduces_consistent_labels() {
    let mut r = rng::rng(302);
    for trial in 0..10 {
        let rows: Vec<Vec<f64>> = (0..120)
            .map(|_| (0..4).map(|_| r.gen_range(-1.0..1.0)).collect())
            .collect();
        let labels: Vec<usize> = (0..120).map(|_| r.gen_range(0..3)).collect();
        let data = Dataset::new(&rows, labels.clone(), 3).unwrap();
        let params = RfParams {
            n_estimators: 1,
            max_features: MaxFeatures::All,
            max_depth: None,
            bootstrap: false,
            seed: trial,
            ..Default::default()
        };
        let forest = rf_train(&data, &params).unwrap();
        for (x, l) in rows.iter().zip(&labels) {
            assert_eq!(forest.predict(x).unwrap(), *l);
        }
    }
}

#[test]
fn tree_thresholds_sit_at_midpoints() {
    // One feature, labels switch between the points at 0.3 and 0.5.
    let xs = [0.0, 0.1, 0.3, 0.5, 0.7, 1.0];
    let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let labels: Vec<usize> = xs.iter().map(|&x| usize::from(x > 0.4)).collect();
    let data = Dataset::new(&rows, labels, 2).unwrap();
    let params = RfParams {
        n_estimators: 100,
        max_features: MaxFeatures::All,
        max_depth: None,
        ..Default::default()
    };
    for t in 0..100 {
        let tree = grow_tree(&data, (0..xs.len()).collect(), &params, t);
        match tree.nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(feature, 0);
                assert!((threshold - 0.4).abs() < 1e-12);
            }
            Node::Leaf { .. } => panic!("root should split"),
        }
    }
    let forest = rf_train(&data, &params).unwrap();
    for i in 0..=100 {
        let x = i as f64 / 100.0;
        if (x - 0.4).abs() <= 0.02 {
            continue;
        }
        assert_eq!(forest.predict(&[x]).unwrap(), usize::from(x > 0.4), "x = {x}");
    }
}

fn nn_fixture(seed: u64) -> Dataset {
    let mut r = rng::rng(seed);
    let rows: Vec<Vec<f64>> = (0..12)
        .map(|_| (0..3).map(|_| r.gen_range(-1.0..1.0)).collect())
        .collect();
    let labels: Vec<usize> = (0..12).map(|i| i % 3).collect();
    Dataset::new(&rows, labels, 3).unwrap()
}

#[test]
fn nn_gradients_match_finite_differences() {
    let h = 1e-6;
    for loss in [Loss::CrossEntropy, Loss::Mse] {
        for seed in 0..5 {
            let data = nn_fixture(seed);
            let mut net = NeuralNet::init(&[3, 5, 4, 3], loss, seed);
            let mut r = rng::rng(seed + 50);
            for layer in &mut net.layers {
                layer.bias.iter_mut().for_each(|b| *b = r.gen_range(-0.1..0.1));
            }
            let batch: Vec<usize> = (0..data.len()).collect();
            let (_, grads) = net.loss_and_gradients(&data, &batch);
            let loss_at = |n: &NeuralNet| n.loss_and_gradients(&data, &batch).0;
            for (l, layer) in net.layers.iter().enumerate() {
                for k in 0..layer.weights.len() {
                    let mut plus = net.clone();
                    plus.layers[l].weights[k] += h;
                    let mut minus = net.clone();
                    minus.layers[l].weights[k] -= h;
                    let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
                    let err = relative_error(grads.weights[l][k], numeric, 1e-6);
                    assert!(
                        err < 1e-4,
                        "{loss:?} layer {l} w{k}: {} vs {numeric}",
                        grads.weights[l][k]
                    );
                }
                for k in 0..layer.bias.len() {
                    let mut plus = net.clone();
                    plus.layers[l].bias[k] += h;
                    let mut minus = net.clone();
                    minus.layers[l].bias[k] -= h;
                    let numeric = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
                    let err = relative_error(grads.bias[l][k], numeric, 1e-6);
                    assert!(err < 1e-4, "{loss:?} layer {l} b{k}: {} vs {numeric}", grads.bias[l][k]);
                }
            }
        }
    }
}

#[test]
fn small_network_learns_blobs() {
    let centers = [vec![-2.0, -2.0], vec![2.0, 2.0]];
    let (rows, labels) = blobs(&centers, 0.6, 100, 10);
    let data = Dataset::new(&rows, labels, 2).unwrap();
    let params = NnParams {
        optimizer: Optimizer::adam(1e-3),
        dropout_rate: 0.0,
        ..NnParams::new(vec![2, 8, 2], 100)
    };
    let net = nn_train(&data, None, &params).unwrap();
    let (test, test_labels) = blobs(&centers, 0.6, 100, 11);
    let correct = test
        .iter()
        .zip(&test_labels)
        .filter(|(q, l)| net.predict(q).unwrap() == **l)
        .count();
    assert!(correct >= 190, "{correct}/200");
    assert_eq!(net.curves.train_loss.len(), 100);
}

#[test]
fn ovr_argmax_ignores_common_shift() {
    let (rows, labels) = blobs(&[vec![-1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.5]], 0.6, 20, 12);
    let data = Dataset::new(&rows, labels, 3).unwrap();
    let ovr = svm_train_ovr(&data, &SvmParams::rbf(10.0, 0.5)).unwrap();
    let mut shifted = ovr.machines.clone();
    for m in &mut shifted {
        m.bias += 7.25;
    }
    let refs: Vec<_> = shifted.iter().collect();
    let mut r = rng::rng(303);
    for _ in 0..200 {
        let q: Vec<f64> = (0..2).map(|_| r.gen_range(-2.0..2.0)).collect();
        assert_eq!(svm_predict_multiclass(&refs, 3, &q).unwrap(), ovr.predict(&q).unwrap());
    }
}
