mod common;

use fleetlab::guidepath::NodeId;
use fleetlab::predictor::{
    accuracy, argmax, read_checkpoint, softmax, train, write_checkpoint, Dataset, Hyperparameters,
    LstmPredictor, MarkovPredictor, SequenceModel, StationIndex, TaskSequence,
};
use fleetlab::sim::{generate_tasks, MarkovTaskGenerator, TransitionMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::gradient_check;

fn nodes(n: usize) -> Vec<NodeId> {
    (0..n).map(NodeId).collect()
}

fn starts(matrix: &TransitionMatrix, count: usize, seed: u64) -> Vec<usize> {
    let n = matrix.size();
    let mut gen = MarkovTaskGenerator::new(nodes(n), matrix, 3600.0, None, seed).unwrap();
    generate_tasks(&mut gen, count)
        .into_iter()
        .map(|t| t.start.0)
        .collect()
}

#[test]
fn gradients_match_finite_differences() {
    for (seed, window, target) in [
        (1, vec![0, 2, 1], 3),
        (2, vec![3, 3, 0, 1, 2], 0),
        (3, vec![1], 1),
    ] {
        let model = SequenceModel::random(4, 5, 0.5, seed);
        for (block, err) in gradient_check(&model, &window, target, 4, seed) {
            assert!(err < 1e-4, "{block}: relative error {err}");
        }
    }
}

#[test]
#[allow(clippy::needless_range_loop)]
fn generator_frequencies_follow_the_matrix() {
    let m = TransitionMatrix::dominant(6, 0.9).unwrap();
    let s = starts(&m, 20_000, 5);
    let mut counts = vec![vec![0usize; 6]; 6];
    for w in s.windows(2) {
        counts[w[1]][w[0]] += 1;
    }
    for j in 0..6 {
        let col: usize = (0..6).map(|i| counts[i][j]).sum();
        for i in 0..6 {
            let freq = counts[i][j] as f64 / col as f64;
            assert!(
                (freq - m.get(i, j)).abs() <= 0.02,
                "P[{i},{j}] = {} vs {freq}",
                m.get(i, j)
            );
        }
    }
}

#[test]
fn absorbing_and_alternating_chains() {
    let id = TransitionMatrix::identity(4);
    let mut gen = MarkovTaskGenerator::new(nodes(4), &id, 100.0, Some(2), 0).unwrap();
    assert!(generate_tasks(&mut gen, 50)
        .iter()
        .all(|t| t.start == NodeId(2) && t.destination != NodeId(2)));
    let swap = TransitionMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let s = starts(&swap, 100, 1);
    assert!(s.windows(2).all(|w| w[0] != w[1]));
}

#[test]
fn inter_arrival_mean_matches_rate() {
    let m = TransitionMatrix::dominant(3, 0.9).unwrap();
    let mut gen = MarkovTaskGenerator::new(nodes(3), &m, 720.0, None, 9).unwrap();
    let tasks = generate_tasks(&mut gen, 20_000);
    let mean = tasks.last().unwrap().created_at / tasks.len() as f64;
    // 5 s expected; the standard error of the mean is 5 / sqrt(20000)
    assert!((mean - 5.0).abs() < 0.15, "mean gap {mean}");
}

#[test]
fn markov_fit_recovers_column_argmax() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let n = 5;
    let mut rows = vec![vec![0.0; n]; n];
    for j in 0..n {
        let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
        let sum: f64 = raw.iter().sum();
        for i in 0..n {
            rows[i][j] = raw[i] / sum;
        }
        let big = rng.random_range(0..n);
        rows[big][j] += 1.0;
        for row in rows.iter_mut() {
            row[j] /= 2.0;
        }
    }
    let m = TransitionMatrix::from_rows(&rows).unwrap();
    let fitted = MarkovPredictor::fit(n, &starts(&m, 10_000, 3));
    for j in 0..n {
        let mut col = m.column(j);
        let best = argmax(&col);
        col.sort_by(|a, b| b.total_cmp(a));
        if col[0] - col[1] >= 0.1 {
            assert_eq!(fitted.predict(j), best, "column {j}");
        }
    }
}

#[test]
fn deterministic_cycle_is_learned_exactly() {
    let seq: Vec<usize> = (0..90).map(|i| i % 3).collect();
    let data = Dataset::temporal_split(seq, 0.8);
    let hp = Hyperparameters {
        window: 1,
        hidden: 8,
        epochs: 40,
        learning_rate: 0.02,
        ..Default::default()
    };
    let mut model = SequenceModel::random(3, 8, hp.init_scale, 1);
    train(&mut model, data.train(), &hp).unwrap();
    assert_eq!(accuracy(&model, data.test_samples(1)).unwrap(), 1.0);

    let lstm = LstmPredictor {
        model,
        window: 1,
        stations: StationIndex::new(&[NodeId(10), NodeId(11), NodeId(12)]),
    };
    let mut s = TaskSequence::new(1);
    s.push(1);
    assert_eq!(lstm.predict_next_start(&s).unwrap().0, NodeId(12));
}

#[test]
fn checkpoint_roundtrip_is_exact() {
    let model = SequenceModel::random(6, 7, 0.08, 4);
    let lstm = LstmPredictor {
        model,
        window: 5,
        stations: StationIndex::new(&nodes(6)),
    };
    let mut a = Vec::new();
    write_checkpoint(&mut a, &lstm).unwrap();
    let back = read_checkpoint(a.as_slice()).unwrap();
    assert_eq!(back, lstm);
    let mut b = Vec::new();
    write_checkpoint(&mut b, &back).unwrap();
    assert_eq!(a, b);
    assert!(read_checkpoint(&a[..a.len() - 3]).is_err());
}

#[test]
fn training_is_reproducible() {
    let m = TransitionMatrix::dominant(4, 0.9).unwrap();
    let seq = starts(&m, 300, 2);
    let hp = Hyperparameters {
        hidden: 6,
        epochs: 2,
        ..Default::default()
    };
    let run = || {
        let mut model = SequenceModel::random(4, 6, hp.init_scale, hp.seed);
        let report = train(&mut model, &seq, &hp).unwrap();
        (model, report.loss_trace)
    };
    assert_eq!(run(), run());
}

proptest! {
    #[test]
    fn softmax_is_a_distribution(logits in proptest::collection::vec(-50.0f64..50.0, 1..12)) {
        let p = softmax(&logits);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|x| *x >= 0.0));
        prop_assert_eq!(argmax(&p), argmax(&logits));
    }

    #[test]
    fn sequence_keeps_the_last_r(items in proptest::collection::vec(0usize..6, 0..30), r in 1usize..6) {
        let mut s = TaskSequence::new(r);
        for &x in &items {
            s.push(x);
        }
        let keep = items.len().min(r);
        prop_assert_eq!(s.to_vec(), items[items.len() - keep..].to_vec());
        prop_assert_eq!(s.window().is_ok(), items.len() >= r);
    }

    #[test]
    fn forward_is_finite(seed in any::<u64>(), window in proptest::collection::vec(0usize..5, 1..8)) {
        let model = SequenceModel::random(5, 4, 0.3, seed);
        prop_assert!(model.forward(&window).unwrap().iter().all(|x| x.is_finite()));
    }
}
