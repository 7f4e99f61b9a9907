//! Mini-batch Adam training with early stopping on dev macro-F1.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::net::{backward, forward, loss, predict};
use super::{BiLstmParams, FeatureFlags, ModelDims, Scalar};
use crate::error::{Error, Result};
use crate::eval::evaluate;
use crate::features::EncodedExample;
use crate::util::derive_seed;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const INIT_SALT: u64 = 0x1217;
const SHUFFLE_SALT: u64 = 0x5487;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub embed_dim: usize,
    pub source_embed_dim: usize,
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    /// Consecutive epochs without a dev macro-F1 improvement tolerated before
    /// stopping; 0 stops right after the first non-improving epoch.
    pub patience: usize,
    pub clip_norm: f64,
    pub seed: u64,
    pub flags: FeatureFlags,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            embed_dim: 64,
            source_embed_dim: 16,
            hidden_dim: 64,
            learning_rate: 1e-3,
            batch_size: 32,
            max_epochs: 20,
            patience: 3,
            clip_norm: 5.0,
            seed: 0,
            flags: FeatureFlags::default(),
        }
    }
}

/// Vocabulary sizes the encoded data was built against.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VocabDims {
    pub text: usize,
    pub hashtags: usize,
    pub sources: usize,
    pub classes: usize,
}

impl VocabDims {
    pub fn model_dims(&self, config: &TrainConfig) -> ModelDims {
        ModelDims {
            text_vocab: self.text,
            hashtag_vocab: self.hashtags,
            source_vocab: self.sources,
            embed: config.embed_dim,
            source_embed: config.source_embed_dim,
            hidden: config.hidden_dim,
            classes: self.classes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HistoryRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub dev_accuracy: f64,
    pub dev_macro_f1: f64,
}

struct Adam<F> {
    m: Vec<Vec<F>>,
    v: Vec<Vec<F>>,
    step: i32,
}

impl<F: Scalar> Adam<F> {
    fn new(params: &BiLstmParams<F>) -> Self {
        let shapes: Vec<usize> = params.tensors().iter().map(|(_, t)| t.len()).collect();
        Self {
            m: shapes.iter().map(|&n| vec![F::zero(); n]).collect(),
            v: shapes.iter().map(|&n| vec![F::zero(); n]).collect(),
            step: 0,
        }
    }

    fn update(&mut self, params: &mut BiLstmParams<F>, grads: &BiLstmParams<F>, lr: f64) {
        self.step += 1;
        let beta1 = F::from_f64(ADAM_BETA1);
        let beta2 = F::from_f64(ADAM_BETA2);
        let eps = F::from_f64(ADAM_EPS);
        let one = F::one();
        let m_corr = F::from_f64(1.0 - ADAM_BETA1.powi(self.step));
        let v_corr = F::from_f64(1.0 - ADAM_BETA2.powi(self.step));
        let lr = F::from_f64(lr);
        for ((slots, grad), (m, v)) in params
            .tensors_mut()
            .into_iter()
            .map(|(_, t)| t)
            .zip(grads.tensors().into_iter().map(|(_, t)| t))
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            for k in 0..slots.len() {
                let g = grad[k];
                m[k] = beta1 * m[k] + (one - beta1) * g;
                v[k] = beta2 * v[k] + (one - beta2) * g * g;
                let m_hat = m[k] / m_corr;
                let v_hat = v[k] / v_corr;
                slots[k] = slots[k] - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
    }
}

/// Scales all gradients so their global L2 norm is at most `clip`.
fn clip_global_norm<F: Scalar>(grads: &mut BiLstmParams<F>, clip: f64) {
    let mut sum_sq = 0.0f64;
    for (_, tensor) in grads.tensors() {
        for &g in tensor {
            let g = g.as_f64();
            sum_sq += g * g;
        }
    }
    let norm = sum_sq.sqrt();
    if norm > clip {
        let scale = F::from_f64(clip / norm);
        for (_, tensor) in grads.tensors_mut() {
            for g in tensor {
                *g = *g * scale;
            }
        }
    }
}

/// Trains from scratch: seeded init, per-epoch seeded shuffles, Adam with
/// global-norm clipping, early stopping on dev macro-F1. Returns the
/// best-dev parameters and the per-epoch history.
pub fn train<F: Scalar>(
    train_set: &[EncodedExample],
    dev_set: &[EncodedExample],
    vocab: &VocabDims,
    config: &TrainConfig,
) -> Result<(BiLstmParams<F>, Vec<HistoryRow>)> {
    if train_set.is_empty() || dev_set.is_empty() {
        return Err(Error::InvalidParam("train and dev splits must be nonempty".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidParam("batch_size must be >= 1".into()));
    }
    if config.learning_rate <= 0.0
        || config.learning_rate.is_nan()
        || config.clip_norm <= 0.0
        || config.clip_norm.is_nan()
    {
        return Err(Error::InvalidParam("learning_rate and clip_norm must be positive".into()));
    }
    let dims = vocab.model_dims(config);
    let mut params = BiLstmParams::<F>::init(dims, config.flags, derive_seed(config.seed, INIT_SALT))?;
    let mut adam = Adam::new(&params);
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, SHUFFLE_SALT));

    let dev_golds: Vec<usize> = dev_set.iter().map(|ex| ex.label).collect();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::new();
    let mut best_f1 = f64::NEG_INFINITY;
    let mut best_params = params.clone();
    let mut strikes = 0usize;

    for epoch in 0..config.max_epochs {
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0f64;
        for (batch_no, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&EncodedExample> = chunk.iter().map(|&i| &train_set[i]).collect();
            let labels: Vec<usize> = batch.iter().map(|ex| ex.label).collect();
            let (logits, cache) = forward(&params, &batch)?;
            let batch_loss = loss(&logits, &labels)?.as_f64();
            if !batch_loss.is_finite() {
                return Err(Error::NonFiniteLoss { epoch, batch: batch_no, value: batch_loss });
            }
            loss_sum += batch_loss * batch.len() as f64;
            let mut grads = backward(&params, &cache, &labels)?;
            clip_global_norm(&mut grads, config.clip_norm);
            adam.update(&mut params, &grads, config.learning_rate);
        }

        let dev_preds: Vec<usize> = dev_set
            .iter()
            .map(|ex| predict(&params, ex).map(|(class, _)| class))
            .collect::<Result<_>>()?;
        let report = evaluate(&dev_preds, &dev_golds, dims.classes)?;
        history.push(HistoryRow {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            dev_accuracy: report.accuracy,
            dev_macro_f1: report.macro_f1,
        });

        if report.macro_f1 > best_f1 {
            best_f1 = report.macro_f1;
            best_params = params.clone();
            strikes = 0;
        } else {
            strikes += 1;
            if strikes > config.patience {
                break;
            }
        }
    }
    Ok((best_params, history))
}

/// Training accuracy of `params` over a set; used by capacity checks.
pub fn accuracy<F: Scalar>(params: &BiLstmParams<F>, set: &[EncodedExample]) -> Result<f64> {
    let mut correct = 0usize;
    for ex in set {
        if predict(params, ex)?.0 == ex.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / set.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::PAD_ID;
    use rand::Rng;

    fn planted_set(n: usize, classes: usize, seed: u64) -> Vec<EncodedExample> {
        // Token ids 2..2+classes are class signals; the rest is shared noise.
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|i| {
                let label = i % classes;
                let mut ids = vec![2 + label];
                for _ in 0..4 {
                    ids.push(2 + classes + rng.gen_range(0..4));
                }
                ids.shuffle(&mut rng);
                let text_len = ids.len();
                ids.resize(8, PAD_ID);
                EncodedExample { text_ids: ids, text_len, hashtag_ids: vec![], source_id: 0, label }
            })
            .collect()
    }

    fn vocab(classes: usize) -> VocabDims {
        VocabDims { text: 2 + classes + 4, hashtags: 2, sources: 1, classes }
    }

    fn small_config(seed: u64) -> TrainConfig {
        TrainConfig {
            embed_dim: 16,
            source_embed_dim: 4,
            hidden_dim: 16,
            learning_rate: 0.01,
            max_epochs: 15,
            patience: 15,
            seed,
            ..TrainConfig::default()
        }
    }

    #[test]
    fn learns_planted_signal() {
        let data = planted_set(120, 3, 0);
        let dev = planted_set(30, 3, 1);
        let (params, history) =
            train::<f32>(&data, &dev, &vocab(3), &small_config(5)).unwrap();
        assert!(!history.is_empty());
        let acc = accuracy(&params, &data).unwrap();
        assert!(acc >= 0.95, "train accuracy {acc}");
    }

    #[test]
    fn same_seed_same_history() {
        let data = planted_set(60, 2, 3);
        let dev = planted_set(20, 2, 4);
        let config = TrainConfig { max_epochs: 4, ..small_config(9) };
        let (_, h1) = train::<f32>(&data, &dev, &vocab(2), &config).unwrap();
        let (_, h2) = train::<f32>(&data, &dev, &vocab(2), &config).unwrap();
        assert_eq!(h1, h2);
    }

    #[test]
    fn patience_zero_stops_after_first_non_improvement() {
        let data = planted_set(40, 2, 5);
        let dev = planted_set(12, 2, 6);
        let config = TrainConfig { patience: 0, max_epochs: 50, ..small_config(11) };
        let (_, history) = train::<f32>(&data, &dev, &vocab(2), &config).unwrap();
        // Every epoch but the last strictly improved dev macro-F1.
        for pair in history.windows(2) {
            if pair[1].epoch + 1 < history.len() {
                assert!(pair[1].dev_macro_f1 > pair[0].dev_macro_f1);
            }
        }
        let last_improvements: Vec<f64> = history.iter().map(|h| h.dev_macro_f1).collect();
        if history.len() < 50 {
            // Stopped early: the final epoch failed to improve on the best.
            let best_before = last_improvements[..history.len() - 1]
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
            assert!(last_improvements[history.len() - 1] <= best_before);
        }
    }

    #[test]
    fn absurd_learning_rate_reports_non_finite_loss() {
        // Bounded LSTM activations keep the loss finite under merely huge
        // steps; an infinite rate drives parameters to inf/NaN immediately.
        let data = planted_set(40, 2, 7);
        let dev = planted_set(12, 2, 8);
        let config = TrainConfig {
            learning_rate: f64::INFINITY,
            max_epochs: 30,
            ..small_config(13)
        };
        match train::<f32>(&data, &dev, &vocab(2), &config) {
            Err(Error::NonFiniteLoss { .. }) => {}
            other => panic!("expected NonFiniteLoss, got {:?}", other.map(|(_, h)| h)),
        }
    }

    #[test]
    fn clip_bounds_global_norm() {
        let dims = vocab(2).model_dims(&small_config(0));
        let mut grads = BiLstmParams::<f64>::init(dims, FeatureFlags::default(), 1).unwrap();
        clip_global_norm(&mut grads, 0.5);
        let mut sum_sq = 0.0;
        for (_, t) in grads.tensors() {
            for &g in t {
                sum_sq += g * g;
            }
        }
        assert!(sum_sq.sqrt() <= 0.5 + 1e-9);
    }
}
