mod support;

use opseq_core::corpus::{OpcodeSequence, Vocabulary};
use opseq_core::embed::{
    sgns_loss_and_grad, train_word2vec, train_word2vec_detailed, word2vec_features, Word2VecParams,
};
use opseq_core::rng;
use rand::Rng as _;
use support::*;

fn vocab(m: usize) -> Vocabulary {
    Vocabulary::from_ranked((0..m).map(|i| format!("op{i}")).collect(), vec![0.0; m]).unwrap()
}

#[test]
fn sgns_gradients_match_finite_differences() {
    let mut r = rng::rng(200);
    let h = 1e-5;
    for config in 0..100 {
        let dim = r.gen_range(1..=8);
        let negatives = if config % 2 == 0 { 0 } else { r.gen_range(1..=5) };
        let mut vec = || (0..dim).map(|_| r.gen_range(-1.5..1.5)).collect::<Vec<f64>>();
        let u = vec();
        let v = vec();
        let ns: Vec<Vec<f64>> = (0..negatives).map(|_| vec()).collect();
        let refs: Vec<&[f64]> = ns.iter().map(Vec::as_slice).collect();
        let g = sgns_loss_and_grad(&u, &v, &refs).unwrap();
        assert!((g.loss - sgns_loss_reference(&u, &v, &ns)).abs() < 1e-12);

        let check = |analytic: &[f64], f: &dyn Fn(&[f64]) -> f64, x: &[f64]| {
            for i in 0..x.len() {
                let numeric = central_difference(f, x, i, h);
                let err = relative_error(analytic[i], numeric, 1e-8);
                assert!(err < 1e-5, "config {config}: {} vs {numeric} (rel {err})", analytic[i]);
            }
        };
        check(&g.center, &|x| sgns_loss_reference(x, &v, &ns), &u);
        check(&g.context, &|x| sgns_loss_reference(&u, x, &ns), &v);
        for k in 0..negatives {
            let f = |x: &[f64]| {
                let mut ns2 = ns.clone();
                ns2[k] = x.to_vec();
                sgns_loss_reference(&u, &v, &ns2)
            };
            check(&g.negatives[k], &f, &ns[k]);
        }
    }
}

#[test]
fn alternating_sequence_learns_true_context() {
    let seq = OpcodeSequence::new("alt", "f", (0..10_000).map(|i| i % 2).collect());
    let t = train_word2vec_detailed(&seq, &vocab(2), 2, 1, &Word2VecParams::default(), 5).unwrap();
    let dim = 2;
    let input = |id: usize| &t.embedding.vectors[id * dim..(id + 1) * dim];
    let output = |id: usize| &t.context[id * dim..(id + 1) * dim];
    let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    // Held-out alternating positions: the true neighbour must outscore the
    // only possible negative (the center's own symbol).
    let held_out: Vec<usize> = (0..1000).map(|i| (i + 1) % 2).collect();
    let mut wins = 0;
    let mut total = 0;
    for t_pos in 1..held_out.len() - 1 {
        let c = held_out[t_pos];
        for ctx in [held_out[t_pos - 1], held_out[t_pos + 1]] {
            let negative = 1 - ctx;
            total += 1;
            if dot(input(c), output(ctx)) > dot(input(c), output(negative)) {
                wins += 1;
            }
        }
    }
    assert!(wins as f64 >= 0.95 * total as f64, "{wins}/{total}");
}

#[test]
fn training_is_deterministic() {
    let mut r = rng::rng(201);
    let seq = OpcodeSequence::new("s", "f", (0..800).map(|_| r.gen_range(0..10)).collect());
    let params = Word2VecParams::default();
    let a = train_word2vec(&seq, &vocab(10), 5, 3, &params, 8).unwrap();
    let b = train_word2vec(&seq, &vocab(10), 5, 3, &params, 8).unwrap();
    assert_eq!(a, b);
    assert!(a.vectors.iter().all(|v| v.is_finite()));
    let f = word2vec_features(&a, &vocab(10), "s", "f").unwrap();
    assert_eq!(f.len(), 50);
    for (i, block) in f.values.chunks(5).enumerate() {
        assert_eq!(block, a.row(i));
    }
}

#[test]
fn standard_feature_lengths() {
    let mut r = rng::rng(202);
    let seq = OpcodeSequence::new("s", "f", (0..300).map(|_| r.gen_range(0..31)).collect());
    let params = Word2VecParams {
        epochs: 1,
        ..Default::default()
    };
    for (dim, len) in [(2, 62), (100, 3100)] {
        let emb = train_word2vec(&seq, &vocab(31), dim, 1, &params, 0).unwrap();
        assert_eq!(word2vec_features(&emb, &vocab(31), "s", "f").unwrap().len(), len);
    }
}
