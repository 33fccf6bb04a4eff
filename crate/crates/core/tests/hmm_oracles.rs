mod support;

use opseq_core::corpus::Vocabulary;
use opseq_core::hmm::{
    baum_welch, fit_from, forward_log_prob, hmm2vec_values, train_with_restarts, BaumWelchConfig, HmmModel,
    RestartPolicy, StateOrdering,
};
use opseq_core::rng;
use rand::Rng as _;
use support::*;

#[test]
fn forward_matches_path_enumeration() {
    let mut r = rng::rng(100);
    for _ in 0..200 {
        let n = r.gen_range(1..=3);
        let m = r.gen_range(1..=4);
        let t = r.gen_range(1..=8);
        let model = random_model(n, m, &mut r);
        let obs: Vec<usize> = (0..t).map(|_| r.gen_range(0..m)).collect();
        let expected = path_sum_log_prob(&model, &obs);
        let got = forward_log_prob(&model, &obs).unwrap();
        let rel = ((got - expected) / expected.abs().max(f64::MIN_POSITIVE)).abs();
        assert!(
            rel < 1e-9 || (got - expected).abs() < 1e-12,
            "N={n} M={m} T={t}: {got} vs {expected}"
        );
    }
}

#[test]
fn em_is_monotone_and_stochastic_every_iteration() {
    let mut r = rng::rng(101);
    let config = BaumWelchConfig::default();
    for run in 0..10 {
        let obs: Vec<usize> = (0..500).map(|_| r.gen_range(0..8)).collect();
        let training = baum_welch(&obs, 2, 8, &config, run).unwrap();
        for w in training.log_likelihoods.windows(2) {
            assert!(w[1] - w[0] >= -1e-8, "run {run}: {} -> {}", w[0], w[1]);
        }
        // Step by step from the same start: every intermediate model is stochastic.
        let mut model = HmmModel::random(2, 8, &mut rng::rng(run));
        let one_step = BaumWelchConfig {
            max_iters: 1,
            tol: f64::NEG_INFINITY,
            ..config
        };
        for _ in 0..20 {
            model = fit_from(model, &obs, &one_step).unwrap().model;
            model.validate().unwrap();
        }
    }
}

#[test]
fn planted_model_is_recovered() {
    let truth = HmmModel::from_rows(
        &[vec![0.9, 0.1], vec![0.1, 0.9]],
        &[vec![0.9, 0.1], vec![0.1, 0.9]],
        &[0.5, 0.5],
    )
    .unwrap();
    let mut r = rng::rng(7);
    let obs = sample_hmm(&truth, 5000, &mut r);
    let out = train_with_restarts(&obs, 2, 2, &RestartPolicy::fixed(50), &BaumWelchConfig::default(), 7).unwrap();
    let gap = permuted_b_distance(&out.best, &truth);
    assert!(gap <= 0.05, "B off by {gap}");
}

#[test]
fn hmm2vec_is_permutation_invariant() {
    let mut r = rng::rng(102);
    let vocab = Vocabulary::from_ranked((0..31).map(|i| format!("op{i}")).collect(), vec![0.0; 31]).unwrap();
    for _ in 0..100 {
        let model = random_model(2, 31, &mut r);
        let v = hmm2vec_values(&model, &vocab, StateOrdering::TwoState).unwrap();
        assert_eq!(v.len(), 62);
        let swapped = model.permute_states(&[1, 0]).unwrap();
        assert_eq!(hmm2vec_values(&swapped, &vocab, StateOrdering::TwoState).unwrap(), v);
        for block in v.chunks(31) {
            assert!((block.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        assert!(v[0] >= v[31]);
    }
}

#[test]
fn restarts_are_a_pure_function_of_inputs() {
    let mut r = rng::rng(103);
    let obs: Vec<usize> = (0..400).map(|_| r.gen_range(0..6)).collect();
    let policy = RestartPolicy::fixed(4);
    let config = BaumWelchConfig::default();
    let a = train_with_restarts(&obs, 2, 6, &policy, &config, 11).unwrap();
    let b = train_with_restarts(&obs, 2, 6, &policy, &config, 11).unwrap();
    assert_eq!(a.best, b.best);
    assert_eq!(a.restart_log_likelihoods, b.restart_log_likelihoods);
    let c = train_with_restarts(&obs, 2, 6, &policy, &config, 12).unwrap();
    assert_ne!(a.restart_log_likelihoods, c.restart_log_likelihoods);
}
