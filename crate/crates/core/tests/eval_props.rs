//! Property tests for the metric computations.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use emopred::eval::{evaluate, metrics};

/// Independently coded per-class metric oracle.
fn oracle(confusion: &[Vec<usize>]) -> (f64, f64, f64, f64) {
    let c = confusion.len();
    let n: usize = confusion.iter().flatten().sum();
    let mut correct = 0usize;
    let (mut macro_p, mut macro_r, mut macro_f) = (0.0, 0.0, 0.0);
    for (k, row) in confusion.iter().enumerate() {
        correct += row[k];
        let tp = row[k] as f64;
        let pred_k: f64 = (0..c).map(|g| confusion[g][k] as f64).sum();
        let gold_k: f64 = row.iter().map(|&v| v as f64).sum();
        let p = if pred_k == 0.0 { 0.0 } else { tp / pred_k };
        let r = if gold_k == 0.0 { 0.0 } else { tp / gold_k };
        let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        macro_p += p;
        macro_r += r;
        macro_f += f;
    }
    let acc = if n == 0 { 0.0 } else { correct as f64 / n as f64 };
    let c = c as f64;
    (acc, macro_p / c, macro_r / c, macro_f / c)
}

proptest! {
    #[test]
    fn metrics_match_independent_oracle(
        cells in prop::collection::vec(0..30usize, 16),
    ) {
        let confusion: Vec<Vec<usize>> = cells.chunks(4).map(|row| row.to_vec()).collect();
        let report = metrics(&confusion);
        let (acc, p, r, f) = oracle(&confusion);
        prop_assert!((report.accuracy - acc).abs() < 1e-12);
        prop_assert!((report.macro_precision - p).abs() < 1e-12);
        prop_assert!((report.macro_recall - r).abs() < 1e-12);
        prop_assert!((report.macro_f1 - f).abs() < 1e-12);
    }

    #[test]
    fn metrics_invariant_under_class_permutation(
        preds in prop::collection::vec(0..5usize, 1..80),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let golds: Vec<usize> = preds.iter().map(|_| rng.gen_range(0..5)).collect();

        // A fixed permutation of class ids.
        let mut perm: Vec<usize> = (0..5).collect();
        for i in (1..5).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let p2: Vec<usize> = preds.iter().map(|&x| perm[x]).collect();
        let g2: Vec<usize> = golds.iter().map(|&x| perm[x]).collect();

        let a = evaluate(&preds, &golds, 5).unwrap();
        let b = evaluate(&p2, &g2, 5).unwrap();
        prop_assert!((a.accuracy - b.accuracy).abs() < 1e-12);
        prop_assert!((a.macro_precision - b.macro_precision).abs() < 1e-12);
        prop_assert!((a.macro_recall - b.macro_recall).abs() < 1e-12);
        prop_assert!((a.macro_f1 - b.macro_f1).abs() < 1e-12);
    }
}
