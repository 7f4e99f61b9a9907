//! Property tests for the BiLSTM forward contract.

use proptest::prelude::*;

use emopred::features::{EncodedExample, PAD_ID};
use emopred::neural::{forward, softmax, BiLstmParams, FeatureFlags, ModelDims};

fn dims() -> ModelDims {
    ModelDims {
        text_vocab: 12,
        hashtag_vocab: 6,
        source_vocab: 4,
        embed: 5,
        source_embed: 3,
        hidden: 4,
        classes: 5,
    }
}

fn example(ids: &[usize], pad_to: usize, hashtags: Vec<usize>, source_id: usize) -> EncodedExample {
    let mut text_ids = ids.to_vec();
    let text_len = text_ids.len();
    text_ids.resize(pad_to.max(text_len), PAD_ID);
    EncodedExample { text_ids, text_len, hashtag_ids: hashtags, source_id, label: 0 }
}

proptest! {
    #[test]
    fn softmax_rows_sum_to_one(logits in prop::collection::vec(-50.0f64..50.0, 1..24)) {
        let probs = softmax(&logits);
        let sum: f64 = probs.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-6, "sum {}", sum);
        prop_assert!(probs.iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn softmax_is_shift_invariant(
        logits in prop::collection::vec(-30.0f64..30.0, 2..10),
        shift in -100.0f64..100.0,
    ) {
        let shifted: Vec<f64> = logits.iter().map(|z| z + shift).collect();
        for (a, b) in softmax(&logits).iter().zip(softmax(&shifted)) {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn appending_padding_never_changes_logits(
        ids in prop::collection::vec(1..12usize, 1..10),
        extra_padding in 0..12usize,
        hashtags in prop::collection::vec(1..6usize, 0..4),
        source_id in 0..4usize,
        seed in any::<u64>(),
    ) {
        let params =
            BiLstmParams::<f64>::init(dims(), FeatureFlags::new(true, true), seed).unwrap();
        let tight = example(&ids, ids.len(), hashtags.clone(), source_id);
        let padded = example(&ids, ids.len() + extra_padding, hashtags, source_id);
        let (a, _) = forward(&params, &[&tight]).unwrap();
        let (b, _) = forward(&params, &[&padded]).unwrap();
        prop_assert_eq!(&a[0], &b[0]);
    }
}
