//! Forward pass, cross-entropy loss, and backpropagation through time.

use super::{BiLstmParams, DirectionParams, Scalar};
use crate::error::{Error, Result};
use crate::features::EncodedExample;

fn sigmoid<F: Scalar>(z: F) -> F {
    F::one() / (F::one() + (-z).exp())
}

/// Numerically stabilized softmax (max subtraction).
pub fn softmax<F: Scalar>(logits: &[F]) -> Vec<F> {
    let max = logits.iter().cloned().fold(F::neg_infinity(), F::max);
    let exps: Vec<F> = logits.iter().map(|&z| (z - max).exp()).collect();
    let sum = exps.iter().fold(F::zero(), |a, &b| a + b);
    exps.into_iter().map(|e| e / sum).collect()
}

/// Per-timestep gate activations of one direction, in processing order.
#[derive(Debug, Clone)]
pub(crate) struct StepCache<F> {
    pub i: Vec<F>,
    pub f: Vec<F>,
    pub g: Vec<F>,
    pub o: Vec<F>,
    pub c: Vec<F>,
    pub tanh_c: Vec<F>,
    pub h: Vec<F>,
}

#[derive(Debug, Clone)]
pub(crate) struct ExampleCache<F> {
    /// Unpadded token ids in text order.
    pub ids: Vec<usize>,
    /// Forward direction steps (text order).
    pub fwd: Vec<StepCache<F>>,
    /// Backward direction steps (reverse text order).
    pub bwd: Vec<StepCache<F>>,
    pub hashtag_ids: Vec<usize>,
    pub source_id: usize,
    pub features: Vec<F>,
    pub probs: Vec<F>,
}

/// Everything [`backward`] needs from the forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<F> {
    pub(crate) examples: Vec<ExampleCache<F>>,
}

impl<F: Scalar> ForwardCache<F> {
    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn probabilities(&self, example: usize) -> &[F] {
        &self.examples[example].probs
    }
}

fn run_direction<F: Scalar>(
    dir: &DirectionParams<F>,
    params: &BiLstmParams<F>,
    ids: impl Iterator<Item = usize>,
) -> Vec<StepCache<F>> {
    let hidden = params.dims.hidden;
    let mut steps = Vec::new();
    let mut h_prev = vec![F::zero(); hidden];
    let mut c_prev = vec![F::zero(); hidden];
    for id in ids {
        let x = params.e_text.row(id);
        let mut pre = [
            dir.input.b.clone(),
            dir.forget.b.clone(),
            dir.cell.b.clone(),
            dir.output.b.clone(),
        ];
        for (z, gate) in pre.iter_mut().zip(dir.gates()) {
            gate.w.matvec_add(x, z);
            gate.u.matvec_add(&h_prev, z);
        }
        let [zi, zf, zg, zo] = pre;
        let i: Vec<F> = zi.into_iter().map(sigmoid).collect();
        let f: Vec<F> = zf.into_iter().map(sigmoid).collect();
        let g: Vec<F> = zg.into_iter().map(|z| z.tanh()).collect();
        let o: Vec<F> = zo.into_iter().map(sigmoid).collect();
        let c: Vec<F> = (0..hidden).map(|k| f[k] * c_prev[k] + i[k] * g[k]).collect();
        let tanh_c: Vec<F> = c.iter().map(|&v| v.tanh()).collect();
        let h: Vec<F> = (0..hidden).map(|k| o[k] * tanh_c[k]).collect();
        h_prev = h.clone();
        c_prev = c.clone();
        steps.push(StepCache { i, f, g, o, c, tanh_c, h });
    }
    steps
}

fn check_example<F: Scalar>(params: &BiLstmParams<F>, ex: &EncodedExample) -> Result<()> {
    let dims = &params.dims;
    for &id in &ex.text_ids {
        if id >= dims.text_vocab {
            return Err(Error::IdOutOfRange { id, size: dims.text_vocab });
        }
    }
    for &id in &ex.hashtag_ids {
        if id >= dims.hashtag_vocab {
            return Err(Error::IdOutOfRange { id, size: dims.hashtag_vocab });
        }
    }
    if ex.source_id >= dims.source_vocab {
        return Err(Error::IdOutOfRange { id: ex.source_id, size: dims.source_vocab });
    }
    Ok(())
}

/// Runs the model over a batch. Padding positions are never touched: each
/// example is processed over its true length only, so appending `<pad>`
/// tokens cannot change the logits.
pub fn forward<F: Scalar>(
    params: &BiLstmParams<F>,
    batch: &[&EncodedExample],
) -> Result<(Vec<Vec<F>>, ForwardCache<F>)> {
    if batch.is_empty() {
        return Err(Error::InvalidParam("forward needs a nonempty batch".into()));
    }
    let dims = &params.dims;
    let hidden = dims.hidden;
    let mut logits_out = Vec::with_capacity(batch.len());
    let mut caches = Vec::with_capacity(batch.len());
    for ex in batch {
        check_example(params, ex)?;
        let ids: Vec<usize> = ex.text_ids[..ex.text_len].to_vec();
        let fwd = run_direction(&params.fwd, params, ids.iter().copied());
        let bwd = run_direction(&params.bwd, params, ids.iter().rev().copied());

        let mut features = vec![F::zero(); dims.feature_width(params.flags)];
        if let Some(last) = fwd.last() {
            features[..hidden].copy_from_slice(&last.h);
        }
        if let Some(last) = bwd.last() {
            features[hidden..2 * hidden].copy_from_slice(&last.h);
        }
        let mut offset = 2 * hidden;
        if params.flags.use_hashtags {
            if !ex.hashtag_ids.is_empty() {
                let scale = F::from_f64(1.0 / ex.hashtag_ids.len() as f64);
                for &id in &ex.hashtag_ids {
                    for (slot, &v) in features[offset..offset + dims.embed]
                        .iter_mut()
                        .zip(params.e_hash.row(id))
                    {
                        *slot = *slot + v * scale;
                    }
                }
            }
            offset += dims.embed;
        }
        if params.flags.use_source {
            features[offset..offset + dims.source_embed].copy_from_slice(params.e_src.row(ex.source_id));
        }

        let mut logits = params.b_out.clone();
        params.w_out.matvec_add(&features, &mut logits);
        let probs = softmax(&logits);
        logits_out.push(logits);
        caches.push(ExampleCache {
            ids,
            fwd,
            bwd,
            hashtag_ids: ex.hashtag_ids.clone(),
            source_id: ex.source_id,
            features,
            probs,
        });
    }
    Ok((logits_out, ForwardCache { examples: caches }))
}

/// Mean cross-entropy, computed via log-sum-exp.
pub fn loss<F: Scalar>(logits: &[Vec<F>], labels: &[usize]) -> Result<F> {
    if logits.len() != labels.len() {
        return Err(Error::LengthMismatch { preds: logits.len(), golds: labels.len() });
    }
    if logits.is_empty() {
        return Err(Error::InvalidParam("loss over an empty batch".into()));
    }
    let mut total = F::zero();
    for (row, &label) in logits.iter().zip(labels) {
        if label >= row.len() {
            return Err(Error::IdOutOfRange { id: label, size: row.len() });
        }
        let max = row.iter().cloned().fold(F::neg_infinity(), F::max);
        let sum = row.iter().fold(F::zero(), |a, &z| a + (z - max).exp());
        total = total + (max + sum.ln() - row[label]);
    }
    Ok(total / F::from_f64(logits.len() as f64))
}

/// Exact gradients of the mean cross-entropy by backpropagation through time.
/// `<pad>` embedding gradients are forced to zero; tensors of disabled
/// features stay at zero.
pub fn backward<F: Scalar>(
    params: &BiLstmParams<F>,
    cache: &ForwardCache<F>,
    labels: &[usize],
) -> Result<BiLstmParams<F>> {
    if cache.examples.len() != labels.len() {
        return Err(Error::LengthMismatch { preds: cache.examples.len(), golds: labels.len() });
    }
    let dims = &params.dims;
    let hidden = dims.hidden;
    let inv_batch = F::from_f64(1.0 / cache.examples.len() as f64);
    let mut grads = params.zeros_like();

    for (ex, &label) in cache.examples.iter().zip(labels) {
        if label >= dims.classes {
            return Err(Error::IdOutOfRange { id: label, size: dims.classes });
        }
        // d loss / d logits = (softmax - onehot) / batch
        let dlogits: Vec<F> = ex
            .probs
            .iter()
            .enumerate()
            .map(|(j, &p)| (p - if j == label { F::one() } else { F::zero() }) * inv_batch)
            .collect();
        for (slot, &d) in grads.b_out.iter_mut().zip(&dlogits) {
            *slot = *slot + d;
        }
        grads.w_out.add_outer(&dlogits, &ex.features);
        let mut dfeatures = vec![F::zero(); ex.features.len()];
        params.w_out.matvec_t_add(&dlogits, &mut dfeatures);

        let mut offset = 2 * hidden;
        if params.flags.use_hashtags {
            if !ex.hashtag_ids.is_empty() {
                let scale = F::from_f64(1.0 / ex.hashtag_ids.len() as f64);
                for &id in &ex.hashtag_ids {
                    for (slot, &d) in
                        grads.e_hash.row_mut(id).iter_mut().zip(&dfeatures[offset..offset + dims.embed])
                    {
                        *slot = *slot + d * scale;
                    }
                }
            }
            offset += dims.embed;
        }
        if params.flags.use_source {
            for (slot, &d) in grads
                .e_src
                .row_mut(ex.source_id)
                .iter_mut()
                .zip(&dfeatures[offset..offset + dims.source_embed])
            {
                *slot = *slot + d;
            }
        }

        if !ex.ids.is_empty() {
            backward_direction(
                &params.fwd,
                params,
                &mut grads,
                Direction::Fwd,
                &ex.ids,
                &ex.fwd,
                &dfeatures[..hidden],
            );
            let rev_ids: Vec<usize> = ex.ids.iter().rev().copied().collect();
            backward_direction(
                &params.bwd,
                params,
                &mut grads,
                Direction::Bwd,
                &rev_ids,
                &ex.bwd,
                &dfeatures[hidden..2 * hidden],
            );
        }
    }
    grads.zero_pad_rows();
    Ok(grads)
}

#[derive(Clone, Copy)]
enum Direction {
    Fwd,
    Bwd,
}

/// BPTT through one direction. `ids` and `steps` are in processing order;
/// the external gradient `dh_last` applies to the final processed step.
#[allow(clippy::too_many_arguments)]
fn backward_direction<F: Scalar>(
    dir: &DirectionParams<F>,
    params: &BiLstmParams<F>,
    grads: &mut BiLstmParams<F>,
    which: Direction,
    ids: &[usize],
    steps: &[super::net::StepCache<F>],
    dh_last: &[F],
) {
    let hidden = params.dims.hidden;
    let embed = params.dims.embed;
    let zeros = vec![F::zero(); hidden];
    let mut dh_next = dh_last.to_vec();
    let mut dc_next = vec![F::zero(); hidden];
    for t in (0..steps.len()).rev() {
        let step = &steps[t];
        let c_prev = if t > 0 { &steps[t - 1].c } else { &zeros };
        let h_prev = if t > 0 { &steps[t - 1].h } else { &zeros };

        let mut d_pre = [
            vec![F::zero(); hidden],
            vec![F::zero(); hidden],
            vec![F::zero(); hidden],
            vec![F::zero(); hidden],
        ];
        let mut dc_carry = vec![F::zero(); hidden];
        for k in 0..hidden {
            let dh = dh_next[k];
            let d_o = dh * step.tanh_c[k];
            let dc = dh * step.o[k] * (F::one() - step.tanh_c[k] * step.tanh_c[k]) + dc_next[k];
            let di = dc * step.g[k];
            let df = dc * c_prev[k];
            let dg = dc * step.i[k];
            dc_carry[k] = dc * step.f[k];
            d_pre[0][k] = di * step.i[k] * (F::one() - step.i[k]);
            d_pre[1][k] = df * step.f[k] * (F::one() - step.f[k]);
            d_pre[2][k] = dg * (F::one() - step.g[k] * step.g[k]);
            d_pre[3][k] = d_o * step.o[k] * (F::one() - step.o[k]);
        }
        dc_next = dc_carry;

        let x = params.e_text.row(ids[t]);
        let grad_dir = match which {
            Direction::Fwd => &mut grads.fwd,
            Direction::Bwd => &mut grads.bwd,
        };
        for (gate_grads, d) in grad_dir.gates_mut().into_iter().zip(&d_pre) {
            gate_grads.w.add_outer(d, x);
            gate_grads.u.add_outer(d, h_prev);
            for (slot, &v) in gate_grads.b.iter_mut().zip(d) {
                *slot = *slot + v;
            }
        }

        let mut dx = vec![F::zero(); embed];
        let mut dh_prev = vec![F::zero(); hidden];
        for (gate, d) in dir.gates().into_iter().zip(&d_pre) {
            gate.w.matvec_t_add(d, &mut dx);
            gate.u.matvec_t_add(d, &mut dh_prev);
        }
        for (slot, &v) in grads.e_text.row_mut(ids[t]).iter_mut().zip(&dx) {
            *slot = *slot + v;
        }
        dh_next = dh_prev;
    }
}

/// Argmax of the softmax with the probability vector; ties break to the
/// lowest class id.
pub fn predict<F: Scalar>(
    params: &BiLstmParams<F>,
    example: &EncodedExample,
) -> Result<(usize, Vec<F>)> {
    let (_, cache) = forward(params, &[example])?;
    let probs = cache.probabilities(0).to_vec();
    let mut best = 0;
    for (j, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = j;
        }
    }
    Ok((best, probs))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::{FeatureFlags, ModelDims};

    fn dims() -> ModelDims {
        ModelDims {
            text_vocab: 8,
            hashtag_vocab: 5,
            source_vocab: 3,
            embed: 4,
            source_embed: 2,
            hidden: 3,
            classes: 4,
        }
    }

    fn example(ids: &[usize], max_len: usize) -> EncodedExample {
        let mut text_ids = ids.to_vec();
        let text_len = text_ids.len();
        text_ids.resize(max_len, crate::features::PAD_ID);
        EncodedExample { text_ids, text_len, hashtag_ids: vec![], source_id: 0, label: 0 }
    }

    #[test]
    fn zero_params_give_uniform_softmax() {
        let params = BiLstmParams::<f64>::zeros(dims(), FeatureFlags::default()).unwrap();
        let ex = example(&[2, 3, 4], 6);
        let (logits, cache) = forward(&params, &[&ex]).unwrap();
        assert!(logits[0].iter().all(|&z| z == 0.0));
        for &p in cache.probabilities(0) {
            assert!((p - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn padding_does_not_change_logits() {
        let params =
            BiLstmParams::<f64>::init(dims(), FeatureFlags::new(true, true), 5).unwrap();
        let short = example(&[2, 3, 4], 4);
        let long = example(&[2, 3, 4], 16);
        let (a, _) = forward(&params, &[&short]).unwrap();
        let (b, _) = forward(&params, &[&long]).unwrap();
        assert_eq!(a[0], b[0]);
    }

    #[test]
    fn batch_membership_does_not_change_logits() {
        let params = BiLstmParams::<f64>::init(dims(), FeatureFlags::default(), 5).unwrap();
        let a = example(&[2, 3], 8);
        let b = example(&[4, 5, 6, 7], 8);
        let (alone, _) = forward(&params, &[&a]).unwrap();
        let (batched, _) = forward(&params, &[&b, &a]).unwrap();
        assert_eq!(alone[0], batched[1]);
    }

    #[test]
    fn disabled_flags_match_zeroed_feature_columns() {
        // With hashtag/source embeddings zeroed and the corresponding W_out
        // columns zeroed, the flag-on model computes the same logits as the
        // flag-off model.
        let d = dims();
        let off = BiLstmParams::<f64>::init(d, FeatureFlags::default(), 9).unwrap();
        let mut on = BiLstmParams::<f64>::zeros(d, FeatureFlags::new(true, true)).unwrap();
        on.e_text = off.e_text.clone();
        on.fwd = off.fwd.clone();
        on.bwd = off.bwd.clone();
        on.b_out = off.b_out.clone();
        for class in 0..d.classes {
            on.w_out.row_mut(class)[..2 * d.hidden].copy_from_slice(off.w_out.row(class));
        }
        let mut ex = example(&[2, 3, 4], 6);
        ex.hashtag_ids = vec![1, 2];
        ex.source_id = 1;
        let (a, _) = forward(&off, &[&ex]).unwrap();
        let (b, _) = forward(&on, &[&ex]).unwrap();
        for (x, y) in a[0].iter().zip(&b[0]) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn permuting_disabled_inputs_is_invisible() {
        let params = BiLstmParams::<f64>::init(dims(), FeatureFlags::default(), 11).unwrap();
        let mut a = example(&[2, 3], 4);
        a.hashtag_ids = vec![1, 2, 3];
        a.source_id = 0;
        let mut b = a.clone();
        b.hashtag_ids = vec![4, 4];
        b.source_id = 2;
        let (la, _) = forward(&params, &[&a]).unwrap();
        let (lb, _) = forward(&params, &[&b]).unwrap();
        assert_eq!(la[0], lb[0]);
    }

    #[test]
    fn loss_analytic_cases() {
        // Uniform softmax over 20 classes: ln 20.
        let logits = vec![vec![0.0f64; 20]];
        let l = loss(&logits, &[3]).unwrap();
        assert!((l - 20f64.ln()).abs() < 1e-12);
        assert!((l - 2.9957).abs() < 1e-4);

        // Hand case: logits [2, 0], label 0 -> ln(1 + e^-2).
        let l = loss(&[vec![2.0f64, 0.0]], &[0]).unwrap();
        assert!((l - (1.0 + (-2.0f64).exp()).ln()).abs() < 1e-12);
        assert!((l - 0.1269).abs() < 1e-4);

        // Confident correct logits: loss near zero.
        let l = loss(&[vec![50.0f64, 0.0, 0.0]], &[0]).unwrap();
        assert!(l < 1e-12);
    }

    #[test]
    fn output_layer_gradient_matches_closed_form() {
        let params = BiLstmParams::<f64>::init(dims(), FeatureFlags::default(), 13).unwrap();
        let ex = example(&[2, 5, 3], 4);
        let (_, cache) = forward(&params, &[&ex]).unwrap();
        let grads = backward(&params, &cache, &[1]).unwrap();
        let probs = cache.probabilities(0);
        let features = &cache.examples[0].features;
        for (class, &p) in probs.iter().enumerate() {
            let d = p - if class == 1 { 1.0 } else { 0.0 };
            assert!((grads.b_out[class] - d).abs() < 1e-12);
            for (k, &f) in features.iter().enumerate() {
                assert!((grads.w_out.row(class)[k] - d * f).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn confident_correct_prediction_has_tiny_gradients() {
        let d = dims();
        let mut params = BiLstmParams::<f64>::init(d, FeatureFlags::default(), 17).unwrap();
        // Saturate the output bias toward class 2.
        params.b_out = vec![-40.0, -40.0, 40.0, -40.0];
        let ex = example(&[2], 2);
        let (_, cache) = forward(&params, &[&ex]).unwrap();
        let grads = backward(&params, &cache, &[2]).unwrap();
        for (name, tensor) in grads.tensors() {
            for &g in tensor {
                assert!(g.abs() < 1e-12, "{name}: {g}");
            }
        }
    }

    #[test]
    fn softmax_rows_sum_to_one_and_shift_invariant() {
        let logits = vec![3.0f64, -50.0, 49.9, 0.2];
        let p = softmax(&logits);
        let sum: f64 = p.iter().sum();
        assert!((sum - 1.0).abs() < 1e-6);
        let shifted: Vec<f64> = logits.iter().map(|z| z + 123.0).collect();
        let q = softmax(&shifted);
        for (a, b) in p.iter().zip(&q) {
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn predict_ties_break_to_lowest_class() {
        let params = BiLstmParams::<f64>::zeros(dims(), FeatureFlags::default()).unwrap();
        let ex = example(&[2, 3], 4);
        let (class, probs) = predict(&params, &ex).unwrap();
        assert_eq!(class, 0);
        let sum: f64 = probs.iter().sum();
        assert!((sum - 1.0).abs() < 1e-6);
    }

    #[test]
    fn out_of_range_ids_are_rejected() {
        let params = BiLstmParams::<f64>::zeros(dims(), FeatureFlags::default()).unwrap();
        let ex = example(&[99], 2);
        assert!(matches!(forward(&params, &[&ex]), Err(Error::IdOutOfRange { .. })));
    }
}
