//! One-vs-rest linear SVM trained by epoch-shuffled SGD on the hinge loss
//! with L2 regularization.

use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::argmax;
use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::util::derive_seed;

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LinearConfig {
    /// Base learning rate; epoch `e` uses `learning_rate / (1 + e)`.
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub margin: f64,
    pub seed: u64,
}

impl Default for LinearConfig {
    fn default() -> Self {
        Self { learning_rate: 0.1, epochs: 20, l2: 1e-4, margin: 1.0, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub dim: usize,
    pub config: LinearConfig,
}

impl LinearModel {
    pub fn num_classes(&self) -> usize {
        self.weights.len()
    }

    /// Raw per-class scores `w_c . x + b_c`.
    pub fn decision(&self, x: &SparseVector) -> Result<Vec<f64>> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.dim() });
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.bias)
            .map(|(w, &b)| x.dot_dense(w) + b)
            .collect())
    }

    /// Predicted class id; ties break to the lowest id.
    pub fn predict(&self, x: &SparseVector) -> Result<usize> {
        Ok(argmax(&self.decision(x)?))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let wrapped = Versioned { version: FORMAT_VERSION, kind: "linear".into(), model: self.clone() };
        let json = serde_json::to_string(&wrapped).map_err(|e| Error::Malformed {
            what: "linear model".into(),
            detail: e.to_string(),
        })?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path)?;
        let wrapped: Versioned = serde_json::from_str(&json).map_err(|e| Error::Malformed {
            what: "linear model file".into(),
            detail: e.to_string(),
        })?;
        if wrapped.version != FORMAT_VERSION || wrapped.kind != "linear" {
            return Err(Error::IncompatibleCheckpoint(format!(
                "expected linear model v{FORMAT_VERSION}, found {} v{}",
                wrapped.kind, wrapped.version
            )));
        }
        Ok(wrapped.model)
    }
}

#[derive(Serialize, Deserialize)]
struct Versioned {
    version: u32,
    kind: String,
    model: LinearModel,
}

/// Trains one binary hinge-SGD model per class. Each class uses its own
/// derived seed, so one-vs-rest problems are independent of training order.
pub fn train_linear(
    train: &[(SparseVector, usize)],
    num_classes: usize,
    config: &LinearConfig,
) -> Result<LinearModel> {
    if train.is_empty() {
        return Err(Error::InvalidParam("empty training set".into()));
    }
    if num_classes == 0 {
        return Err(Error::InvalidParam("need at least one class".into()));
    }
    let dim = train[0].0.dim();
    for (x, label) in train {
        if x.dim() != dim {
            return Err(Error::DimensionMismatch { expected: dim, got: x.dim() });
        }
        if *label >= num_classes {
            return Err(Error::IdOutOfRange { id: *label, size: num_classes });
        }
    }

    let mut weights = Vec::with_capacity(num_classes);
    let mut bias = Vec::with_capacity(num_classes);
    for class in 0..num_classes {
        let (w, b) = train_binary(train, class, dim, config, derive_seed(config.seed, class as u64));
        if !w.iter().all(|v| v.is_finite()) || !b.is_finite() {
            return Err(Error::InvalidParam(
                "training diverged to non-finite weights; lower the learning rate".into(),
            ));
        }
        weights.push(w);
        bias.push(b);
    }
    Ok(LinearModel { weights, bias, dim, config: config.clone() })
}

fn train_binary(
    train: &[(SparseVector, usize)],
    class: usize,
    dim: usize,
    config: &LinearConfig,
    class_seed: u64,
) -> (Vec<f64>, f64) {
    // w is kept as scale * v so the L2 decay is O(1) per sample.
    let mut v = vec![0.0f64; dim];
    let mut scale = 1.0f64;
    let mut b = 0.0f64;
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..config.epochs {
        let lr = config.learning_rate / (1.0 + epoch as f64);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(class_seed, epoch as u64));
        order.shuffle(&mut rng);
        for &i in &order {
            let (x, label) = &train[i];
            let y = if *label == class { 1.0 } else { -1.0 };
            let margin = y * (scale * x.dot_dense(&v) + b);
            scale *= 1.0 - lr * config.l2;
            if scale.abs() < 1e-9 {
                for w in &mut v {
                    *w *= scale;
                }
                scale = 1.0;
            }
            if margin < config.margin {
                for &(j, value) in x.entries() {
                    v[j] += lr * y * value / scale;
                }
                b += lr * y;
            }
        }
    }
    (v.into_iter().map(|w| w * scale).collect(), b)
}

/// Mean hinge loss plus L2 penalty summed over the one-vs-rest problems.
/// Used by tests to observe training progress.
pub fn ovr_objective(model: &LinearModel, data: &[(SparseVector, usize)]) -> f64 {
    let mut total = 0.0;
    for class in 0..model.num_classes() {
        let w = &model.weights[class];
        let b = model.bias[class];
        let hinge: f64 = data
            .iter()
            .map(|(x, label)| {
                let y = if *label == class { 1.0 } else { -1.0 };
                (model.config.margin - y * (x.dot_dense(w) + b)).max(0.0)
            })
            .sum::<f64>()
            / data.len() as f64;
        let l2: f64 = w.iter().map(|v| v * v).sum::<f64>() * model.config.l2 / 2.0;
        total += hinge + l2;
    }
    total
}
