//! Central-finite-difference verification of the analytic gradients.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::net::{backward, forward, loss};
use super::{BiLstmParams, Scalar};
use crate::error::Result;
use crate::features::EncodedExample;
use crate::util::derive_seed;

/// Worst relative error found and where.
#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub worst_tensor: String,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
    pub entries_checked: usize,
}

fn batch_loss<F: Scalar>(
    params: &BiLstmParams<F>,
    batch: &[&EncodedExample],
    labels: &[usize],
) -> Result<f64> {
    let (logits, _) = forward(params, batch)?;
    Ok(loss(&logits, labels)?.as_f64())
}

/// Compares every analytic gradient entry (or a seeded subsample of at least
/// `max_entries_per_tensor` per tensor) against the central difference
/// `(loss(w+eps) - loss(w-eps)) / 2 eps`. Relative error is
/// `|a - n| / max(|a|, |n|, 1e-8)`. Meaningful in `f64` mode.
pub fn grad_check<F: Scalar>(
    params: &mut BiLstmParams<F>,
    batch: &[&EncodedExample],
    labels: &[usize],
    epsilon: f64,
    max_entries_per_tensor: Option<usize>,
    sample_seed: u64,
) -> Result<GradCheckReport> {
    let (logits, cache) = forward(params, batch)?;
    let _ = loss(&logits, labels)?;
    let analytic = backward(params, &cache, labels)?;
    let analytic: Vec<(String, Vec<f64>)> = analytic
        .tensors()
        .into_iter()
        .map(|(name, t)| (name, t.iter().map(|v| v.as_f64()).collect()))
        .collect();

    let mut report = GradCheckReport {
        max_rel_error: 0.0,
        worst_tensor: String::new(),
        worst_index: 0,
        analytic: 0.0,
        numeric: 0.0,
        entries_checked: 0,
    };
    for (tensor_index, (name, grads)) in analytic.iter().enumerate() {
        let indices: Vec<usize> = match max_entries_per_tensor {
            Some(limit) if grads.len() > limit => {
                let mut rng =
                    ChaCha8Rng::seed_from_u64(derive_seed(sample_seed, tensor_index as u64));
                let mut picked = sample(&mut rng, grads.len(), limit).into_vec();
                picked.sort_unstable();
                picked
            }
            _ => (0..grads.len()).collect(),
        };
        for k in indices {
            let original = read_entry(params, tensor_index, k);
            write_entry(params, tensor_index, k, F::from_f64(original.as_f64() + epsilon));
            let plus = batch_loss(params, batch, labels)?;
            write_entry(params, tensor_index, k, F::from_f64(original.as_f64() - epsilon));
            let minus = batch_loss(params, batch, labels)?;
            write_entry(params, tensor_index, k, original);

            let numeric = (plus - minus) / (2.0 * epsilon);
            let a = grads[k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-8);
            report.entries_checked += 1;
            if rel > report.max_rel_error {
                report.max_rel_error = rel;
                report.worst_tensor = name.clone();
                report.worst_index = k;
                report.analytic = a;
                report.numeric = numeric;
            }
        }
    }
    Ok(report)
}

fn read_entry<F: Scalar>(params: &BiLstmParams<F>, tensor: usize, k: usize) -> F {
    params.tensors()[tensor].1[k]
}

fn write_entry<F: Scalar>(params: &mut BiLstmParams<F>, tensor: usize, k: usize, value: F) {
    params.tensors_mut()[tensor].1[k] = value;
}
