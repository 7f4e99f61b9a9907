//! BiLSTM classifier with feature-embedding concatenation, implemented with
//! explicit forward/backward passes.
//!
//! The text is encoded by one LSTM per direction; the final forward state and
//! the final backward state (i.e. the state after reading back to the first
//! token) are concatenated. The mean hashtag embedding and the source
//! embedding are appended when their feature flags are on, and a dense
//! softmax layer decodes the class.
//!
//! Everything is generic over [`Scalar`]: training runs in `f32`, gradient
//! checking requires `f64`.

pub mod gradcheck;
pub mod net;
pub mod train;

pub use gradcheck::{grad_check, GradCheckReport};
pub use net::{backward, forward, loss, predict, softmax, ForwardCache};
pub use train::{train, HistoryRow, TrainConfig, VocabDims};

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::PAD_ID;

const INIT_RANGE: f64 = 0.08;
const CHECKPOINT_VERSION: u32 = 1;

/// Float type the model runs in.
pub trait Scalar:
    num_traits::Float + std::fmt::Debug + std::fmt::Display + Send + Sync + 'static
{
    const PRECISION: &'static str;

    fn from_f64(v: f64) -> Self;
    fn as_f64(self) -> f64;
}

impl Scalar for f32 {
    const PRECISION: &'static str = "f32";

    fn from_f64(v: f64) -> Self {
        v as f32
    }

    fn as_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    const PRECISION: &'static str = "f64";

    fn from_f64(v: f64) -> Self {
        v
    }

    fn as_f64(self) -> f64 {
        self
    }
}

/// Dense row-major matrix; just enough linear algebra for the model.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Scalar> Mat<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![F::zero(); rows * cols] }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, r: usize) -> &[F] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [F] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    /// `out[r] += row_r . x`
    pub fn matvec_add(&self, x: &[F], out: &mut [F]) {
        for (r, slot) in out.iter_mut().enumerate() {
            let row = self.row(r);
            let mut acc = F::zero();
            for (w, &xi) in row.iter().zip(x) {
                acc = acc + *w * xi;
            }
            *slot = *slot + acc;
        }
    }

    /// `out[c] += sum_r self[r][c] * u[r]`
    pub fn matvec_t_add(&self, u: &[F], out: &mut [F]) {
        for (r, &ur) in u.iter().enumerate() {
            for (w, slot) in self.row(r).iter().zip(out.iter_mut()) {
                *slot = *slot + *w * ur;
            }
        }
    }

    /// `self[r][c] += u[r] * v[c]`
    pub fn add_outer(&mut self, u: &[F], v: &[F]) {
        for (r, &ur) in u.iter().enumerate() {
            for (w, &vc) in self.row_mut(r).iter_mut().zip(v) {
                *w = *w + ur * vc;
            }
        }
    }
}

/// All size parameters of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDims {
    pub text_vocab: usize,
    pub hashtag_vocab: usize,
    pub source_vocab: usize,
    pub embed: usize,
    pub source_embed: usize,
    pub hidden: usize,
    pub classes: usize,
}

impl ModelDims {
    /// Width of the concatenated feature vector fed to the output layer.
    pub fn feature_width(&self, flags: FeatureFlags) -> usize {
        2 * self.hidden
            + if flags.use_hashtags { self.embed } else { 0 }
            + if flags.use_source { self.source_embed } else { 0 }
    }

    fn validate(&self) -> Result<()> {
        let all_positive = self.text_vocab >= 2
            && self.hashtag_vocab >= 2
            && self.source_vocab >= 1
            && self.embed >= 1
            && self.source_embed >= 1
            && self.hidden >= 1
            && self.classes >= 1;
        if all_positive {
            Ok(())
        } else {
            Err(Error::InvalidParam(format!("invalid model dims {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureFlags {
    pub use_hashtags: bool,
    pub use_source: bool,
}

impl FeatureFlags {
    pub fn new(use_hashtags: bool, use_source: bool) -> Self {
        Self { use_hashtags, use_source }
    }
}

/// Weights of one LSTM gate: input projection, recurrent projection, bias.
#[derive(Debug, Clone, PartialEq)]
pub struct GateWeights<F> {
    pub w: Mat<F>,
    pub u: Mat<F>,
    pub b: Vec<F>,
}

impl<F: Scalar> GateWeights<F> {
    fn zeros(input: usize, hidden: usize) -> Self {
        Self { w: Mat::zeros(hidden, input), u: Mat::zeros(hidden, hidden), b: vec![F::zero(); hidden] }
    }
}

pub const GATE_NAMES: [&str; 4] = ["input", "forget", "cell", "output"];

/// One direction's LSTM weights, in gate order input/forget/cell/output.
#[derive(Debug, Clone, PartialEq)]
pub struct DirectionParams<F> {
    pub input: GateWeights<F>,
    pub forget: GateWeights<F>,
    pub cell: GateWeights<F>,
    pub output: GateWeights<F>,
}

impl<F: Scalar> DirectionParams<F> {
    fn zeros(input: usize, hidden: usize) -> Self {
        Self {
            input: GateWeights::zeros(input, hidden),
            forget: GateWeights::zeros(input, hidden),
            cell: GateWeights::zeros(input, hidden),
            output: GateWeights::zeros(input, hidden),
        }
    }

    pub fn gates(&self) -> [&GateWeights<F>; 4] {
        [&self.input, &self.forget, &self.cell, &self.output]
    }

    pub fn gates_mut(&mut self) -> [&mut GateWeights<F>; 4] {
        [&mut self.input, &mut self.forget, &mut self.cell, &mut self.output]
    }
}

/// All learnable tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct BiLstmParams<F> {
    pub dims: ModelDims,
    pub flags: FeatureFlags,
    pub e_text: Mat<F>,
    pub e_hash: Mat<F>,
    pub e_src: Mat<F>,
    pub fwd: DirectionParams<F>,
    pub bwd: DirectionParams<F>,
    pub w_out: Mat<F>,
    pub b_out: Vec<F>,
}

impl<F: Scalar> BiLstmParams<F> {
    pub fn zeros(dims: ModelDims, flags: FeatureFlags) -> Result<Self> {
        dims.validate()?;
        Ok(Self {
            dims,
            flags,
            e_text: Mat::zeros(dims.text_vocab, dims.embed),
            e_hash: Mat::zeros(dims.hashtag_vocab, dims.embed),
            e_src: Mat::zeros(dims.source_vocab, dims.source_embed),
            fwd: DirectionParams::zeros(dims.embed, dims.hidden),
            bwd: DirectionParams::zeros(dims.embed, dims.hidden),
            w_out: Mat::zeros(dims.classes, dims.feature_width(flags)),
            b_out: vec![F::zero(); dims.classes],
        })
    }

    /// Uniform(-0.08, 0.08) init for every weight, forget-gate biases at 1.0,
    /// `<pad>` embedding rows zeroed. Bit-identical under the same seed;
    /// tensors are filled in [`BiLstmParams::tensors`] order.
    pub fn init(dims: ModelDims, flags: FeatureFlags, seed: u64) -> Result<Self> {
        let mut params = Self::zeros(dims, flags)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for (_, tensor) in params.tensors_mut() {
            for slot in tensor {
                *slot = F::from_f64(rng.gen_range(-INIT_RANGE..INIT_RANGE));
            }
        }
        for dir in [&mut params.fwd, &mut params.bwd] {
            for b in &mut dir.forget.b {
                *b = F::one();
            }
        }
        params.zero_pad_rows();
        Ok(params)
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.dims, self.flags).expect("dims already validated")
    }

    /// Zeroes the `<pad>` rows of the text and hashtag embeddings.
    pub fn zero_pad_rows(&mut self) {
        for slot in self.e_text.row_mut(PAD_ID) {
            *slot = F::zero();
        }
        for slot in self.e_hash.row_mut(PAD_ID) {
            *slot = F::zero();
        }
    }

    /// Named views of every tensor, in a fixed order shared by the optimizer,
    /// the gradient check, and the checkpoint format.
    pub fn tensors(&self) -> Vec<(String, &[F])> {
        let mut out: Vec<(String, &[F])> = vec![
            ("e_text".into(), self.e_text.data()),
            ("e_hash".into(), self.e_hash.data()),
            ("e_src".into(), self.e_src.data()),
        ];
        for (dir_name, dir) in [("fwd", &self.fwd), ("bwd", &self.bwd)] {
            for (gate_name, gate) in GATE_NAMES.iter().zip(dir.gates()) {
                out.push((format!("{dir_name}.{gate_name}.w"), gate.w.data()));
                out.push((format!("{dir_name}.{gate_name}.u"), gate.u.data()));
                out.push((format!("{dir_name}.{gate_name}.b"), gate.b.as_slice()));
            }
        }
        out.push(("w_out".into(), self.w_out.data()));
        out.push(("b_out".into(), self.b_out.as_slice()));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<(String, &mut [F])> {
        let mut out: Vec<(String, &mut [F])> = vec![
            ("e_text".into(), self.e_text.data_mut()),
            ("e_hash".into(), self.e_hash.data_mut()),
            ("e_src".into(), self.e_src.data_mut()),
        ];
        for (dir_name, dir) in [("fwd", &mut self.fwd), ("bwd", &mut self.bwd)] {
            for (gate_name, gate) in GATE_NAMES.iter().zip(dir.gates_mut()) {
                out.push((format!("{dir_name}.{gate_name}.w"), gate.w.data_mut()));
                out.push((format!("{dir_name}.{gate_name}.u"), gate.u.data_mut()));
                out.push((format!("{dir_name}.{gate_name}.b"), gate.b.as_mut_slice()));
            }
        }
        out.push(("w_out".into(), self.w_out.data_mut()));
        out.push(("b_out".into(), self.b_out.as_mut_slice()));
        out
    }
}

/// Content hashes of the vocabularies a checkpoint was trained against.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabHashes {
    pub text: String,
    pub hashtags: String,
    pub sources: String,
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    precision: String,
    dims: ModelDims,
    flags: FeatureFlags,
    vocab_hashes: VocabHashes,
    tensors: Vec<(String, Vec<f64>)>,
}

/// Writes a versioned JSON checkpoint. Tensor values are stored as `f64`,
/// which embeds `f32` exactly, so round-trips are bit-exact.
pub fn save_checkpoint<F: Scalar>(
    params: &BiLstmParams<F>,
    vocab_hashes: &VocabHashes,
    path: &Path,
) -> Result<()> {
    let file = CheckpointFile {
        version: CHECKPOINT_VERSION,
        precision: F::PRECISION.to_string(),
        dims: params.dims,
        flags: params.flags,
        vocab_hashes: vocab_hashes.clone(),
        tensors: params
            .tensors()
            .into_iter()
            .map(|(name, data)| (name, data.iter().map(|v| v.as_f64()).collect()))
            .collect(),
    };
    let json = serde_json::to_string(&file).map_err(|e| Error::Malformed {
        what: "checkpoint".into(),
        detail: e.to_string(),
    })?;
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_checkpoint<F: Scalar>(path: &Path) -> Result<(BiLstmParams<F>, VocabHashes)> {
    let json = std::fs::read_to_string(path)?;
    let file: CheckpointFile = serde_json::from_str(&json).map_err(|e| Error::Malformed {
        what: "checkpoint file".into(),
        detail: e.to_string(),
    })?;
    if file.version != CHECKPOINT_VERSION {
        return Err(Error::IncompatibleCheckpoint(format!(
            "checkpoint version {} (expected {CHECKPOINT_VERSION})",
            file.version
        )));
    }
    if file.precision != F::PRECISION {
        return Err(Error::IncompatibleCheckpoint(format!(
            "checkpoint precision {} (expected {})",
            file.precision,
            F::PRECISION
        )));
    }
    let mut params = BiLstmParams::<F>::zeros(file.dims, file.flags)?;
    {
        let mut slots = params.tensors_mut();
        if slots.len() != file.tensors.len() {
            return Err(Error::IncompatibleCheckpoint("tensor list mismatch".into()));
        }
        for ((name, slot), (stored_name, values)) in slots.iter_mut().zip(&file.tensors) {
            if name != stored_name || slot.len() != values.len() {
                return Err(Error::IncompatibleCheckpoint(format!(
                    "tensor {stored_name} does not match expected {name} ({} vs {} values)",
                    values.len(),
                    slot.len()
                )));
            }
            for (s, &v) in slot.iter_mut().zip(values) {
                *s = F::from_f64(v);
            }
        }
    }
    Ok((params, file.vocab_hashes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dims() -> ModelDims {
        ModelDims {
            text_vocab: 10,
            hashtag_vocab: 6,
            source_vocab: 3,
            embed: 4,
            source_embed: 2,
            hidden: 5,
            classes: 3,
        }
    }

    #[test]
    fn init_respects_range_forget_bias_and_pad_row() {
        let flags = FeatureFlags::new(true, true);
        let params = BiLstmParams::<f64>::init(dims(), flags, 42).unwrap();
        for (name, tensor) in params.tensors() {
            for &v in tensor {
                if name.contains("forget.b") {
                    assert_eq!(v, 1.0, "{name}");
                } else {
                    assert!(v.abs() <= INIT_RANGE, "{name}: {v}");
                }
            }
        }
        assert!(params.e_text.row(PAD_ID).iter().all(|&v| v == 0.0));
        assert!(params.e_hash.row(PAD_ID).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn init_is_deterministic() {
        let flags = FeatureFlags::default();
        let a = BiLstmParams::<f32>::init(dims(), flags, 7).unwrap();
        let b = BiLstmParams::<f32>::init(dims(), flags, 7).unwrap();
        assert_eq!(a, b);
        let c = BiLstmParams::<f32>::init(dims(), flags, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn feature_width_tracks_flags() {
        let d = dims();
        assert_eq!(d.feature_width(FeatureFlags::default()), 10);
        assert_eq!(d.feature_width(FeatureFlags::new(true, false)), 14);
        assert_eq!(d.feature_width(FeatureFlags::new(false, true)), 12);
        assert_eq!(d.feature_width(FeatureFlags::new(true, true)), 16);
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let flags = FeatureFlags::new(true, false);
        let params = BiLstmParams::<f32>::init(dims(), flags, 3).unwrap();
        let hashes = VocabHashes {
            text: "a".into(),
            hashtags: "b".into(),
            sources: "c".into(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        save_checkpoint(&params, &hashes, &path).unwrap();
        let (back, back_hashes) = load_checkpoint::<f32>(&path).unwrap();
        assert_eq!(back, params);
        assert_eq!(back_hashes, hashes);
        // Precision is part of the contract.
        assert!(load_checkpoint::<f64>(&path).is_err());
    }
}
