//! Random forest of CART trees grown on bootstrap samples, splitting on Gini
//! impurity decrease over a per-node feature subsample.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::argmax;
use crate::error::{Error, Result};
use crate::features::SparseVector;
use crate::util::derive_seed;

const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSubsample {
    /// All features at every node.
    All,
    /// ceil(sqrt(D)) features per node.
    Sqrt,
    /// A fixed count (clamped to D).
    Fixed(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    pub feature_subsample: FeatureSubsample,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            trees: 100,
            max_depth: 20,
            min_leaf: 2,
            feature_subsample: FeatureSubsample::Sqrt,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        n_samples: usize,
        impurity_decrease: f64,
    },
    Leaf {
        counts: Vec<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<TreeNode>,
}

impl Tree {
    /// Leaf class counts for `x`, walking from the root.
    pub fn leaf_counts<'a>(&'a self, x: &SparseVector) -> &'a [usize] {
        let mut node = 0;
        loop {
            match &self.nodes[node] {
                TreeNode::Leaf { counts } => return counts,
                TreeNode::Split { feature, threshold, left, right, .. } => {
                    node = if x.get(*feature) <= *threshold { *left } else { *right };
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
    pub num_classes: usize,
    pub dim: usize,
    pub config: ForestConfig,
}

impl ForestModel {
    /// Summed leaf class counts across trees.
    pub fn scores(&self, x: &SparseVector) -> Result<Vec<f64>> {
        if x.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.dim() });
        }
        let mut scores = vec![0.0; self.num_classes];
        for tree in &self.trees {
            for (class, &count) in tree.leaf_counts(x).iter().enumerate() {
                scores[class] += count as f64;
            }
        }
        Ok(scores)
    }

    /// Predicted class id; ties break to the lowest id.
    pub fn predict(&self, x: &SparseVector) -> Result<usize> {
        Ok(argmax(&self.scores(x)?))
    }

    /// Mean decrease in Gini impurity per feature, weighted by the fraction
    /// of samples reaching each split, averaged over trees and normalized to
    /// sum to one.
    pub fn feature_importances(&self) -> Vec<f64> {
        let mut importances = vec![0.0; self.dim];
        for tree in &self.trees {
            let root_n = match &tree.nodes[0] {
                TreeNode::Split { n_samples, .. } => *n_samples,
                TreeNode::Leaf { counts } => counts.iter().sum(),
            };
            if root_n == 0 {
                continue;
            }
            for node in &tree.nodes {
                if let TreeNode::Split { feature, n_samples, impurity_decrease, .. } = node {
                    importances[*feature] +=
                        *impurity_decrease * *n_samples as f64 / root_n as f64;
                }
            }
        }
        let total: f64 = importances.iter().sum();
        if total > 0.0 {
            for v in &mut importances {
                *v /= total;
            }
        }
        importances
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let wrapped = Versioned { version: FORMAT_VERSION, kind: "forest".into(), model: self.clone() };
        let json = serde_json::to_string(&wrapped).map_err(|e| Error::Malformed {
            what: "forest model".into(),
            detail: e.to_string(),
        })?;
        std::fs::write(path, json)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path)?;
        let wrapped: Versioned = serde_json::from_str(&json).map_err(|e| Error::Malformed {
            what: "forest model file".into(),
            detail: e.to_string(),
        })?;
        if wrapped.version != FORMAT_VERSION || wrapped.kind != "forest" {
            return Err(Error::IncompatibleCheckpoint(format!(
                "expected forest model v{FORMAT_VERSION}, found {} v{}",
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
    model: ForestModel,
}

/// Gini impurity `1 - sum(p^2)` of a class histogram.
pub fn gini_impurity(counts: &[usize]) -> f64 {
    let n: usize = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&k| (k as f64 / n).powi(2)).sum::<f64>()
}

pub fn train_forest(
    train: &[(SparseVector, usize)],
    num_classes: usize,
    config: &ForestConfig,
) -> Result<ForestModel> {
    train_forest_threaded(train, num_classes, config, 1)
}

/// Trains trees in `threads` chunks. Per-tree seeds are derived from the tree
/// index, so the forest is identical for any thread count.
pub fn train_forest_threaded(
    train: &[(SparseVector, usize)],
    num_classes: usize,
    config: &ForestConfig,
    threads: usize,
) -> Result<ForestModel> {
    if config.trees == 0 {
        return Err(Error::InvalidParam("forest needs at least one tree".into()));
    }
    if config.min_leaf == 0 {
        return Err(Error::InvalidParam("min_leaf must be >= 1".into()));
    }
    if train.is_empty() {
        return Err(Error::InvalidParam("empty training set".into()));
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

    let threads = threads.max(1).min(config.trees);
    let mut trees: Vec<Option<Tree>> = vec![None; config.trees];
    if threads == 1 {
        for (t, slot) in trees.iter_mut().enumerate() {
            *slot = Some(grow_tree(train, num_classes, dim, config, t));
        }
    } else {
        let chunk = config.trees.div_ceil(threads);
        std::thread::scope(|scope| {
            for (chunk_index, slots) in trees.chunks_mut(chunk).enumerate() {
                scope.spawn(move || {
                    for (offset, slot) in slots.iter_mut().enumerate() {
                        let t = chunk_index * chunk + offset;
                        *slot = Some(grow_tree(train, num_classes, dim, config, t));
                    }
                });
            }
        });
    }
    Ok(ForestModel {
        trees: trees.into_iter().map(|t| t.expect("every tree built")).collect(),
        num_classes,
        dim,
        config: config.clone(),
    })
}

fn grow_tree(
    train: &[(SparseVector, usize)],
    num_classes: usize,
    dim: usize,
    config: &ForestConfig,
    tree_index: usize,
) -> Tree {
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, tree_index as u64));
    let n = train.len();
    let sample: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    let mut builder = TreeBuilder { train, num_classes, dim, config, rng, nodes: Vec::new() };
    builder.grow(sample, 0);
    Tree { nodes: builder.nodes }
}

struct TreeBuilder<'a> {
    train: &'a [(SparseVector, usize)],
    num_classes: usize,
    dim: usize,
    config: &'a ForestConfig,
    rng: ChaCha8Rng,
    nodes: Vec<TreeNode>,
}

impl TreeBuilder<'_> {
    fn histogram(&self, indices: &[usize]) -> Vec<usize> {
        let mut counts = vec![0usize; self.num_classes];
        for &i in indices {
            counts[self.train[i].1] += 1;
        }
        counts
    }

    fn grow(&mut self, indices: Vec<usize>, depth: usize) -> usize {
        let counts = self.histogram(&indices);
        let impurity = gini_impurity(&counts);
        let can_split = depth < self.config.max_depth
            && indices.len() >= 2 * self.config.min_leaf
            && impurity > 0.0;
        let split = if can_split { self.best_split(&indices, impurity) } else { None };
        match split {
            None => {
                self.nodes.push(TreeNode::Leaf { counts });
                self.nodes.len() - 1
            }
            Some((feature, threshold, decrease)) => {
                let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
                    .iter()
                    .partition(|&&i| self.train[i].0.get(feature) <= threshold);
                let slot = self.nodes.len();
                self.nodes.push(TreeNode::Split {
                    feature,
                    threshold,
                    left: 0,
                    right: 0,
                    n_samples: indices.len(),
                    impurity_decrease: decrease,
                });
                let left = self.grow(left_idx, depth + 1);
                let right = self.grow(right_idx, depth + 1);
                if let TreeNode::Split { left: l, right: r, .. } = &mut self.nodes[slot] {
                    *l = left;
                    *r = right;
                }
                slot
            }
        }
    }

    /// Best (feature, threshold, impurity decrease) over the sampled feature
    /// subset; thresholds sit at midpoints between distinct observed values.
    fn best_split(&mut self, indices: &[usize], parent_impurity: f64) -> Option<(usize, f64, f64)> {
        let m = match self.config.feature_subsample {
            FeatureSubsample::All => self.dim,
            FeatureSubsample::Sqrt => (self.dim as f64).sqrt().ceil() as usize,
            FeatureSubsample::Fixed(k) => k,
        }
        .clamp(1, self.dim);
        let mut features = rand::seq::index::sample(&mut self.rng, self.dim, m).into_vec();
        features.sort_unstable();

        let n = indices.len() as f64;
        let mut best: Option<(f64, usize, f64)> = None;
        for feature in features {
            let mut values: Vec<(f64, usize)> = indices
                .iter()
                .map(|&i| (self.train[i].0.get(feature), self.train[i].1))
                .collect();
            values.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite values"));

            let mut left_counts = vec![0usize; self.num_classes];
            let mut right_counts = self.histogram(indices);
            for i in 0..values.len() - 1 {
                let (value, label) = values[i];
                left_counts[label] += 1;
                right_counts[label] -= 1;
                if value == values[i + 1].0 {
                    continue;
                }
                let n_left = i + 1;
                let n_right = values.len() - n_left;
                if n_left < self.config.min_leaf || n_right < self.config.min_leaf {
                    continue;
                }
                let weighted = (n_left as f64 * gini_impurity(&left_counts)
                    + n_right as f64 * gini_impurity(&right_counts))
                    / n;
                let gain = parent_impurity - weighted;
                if gain > 1e-12 && best.is_none_or(|(g, _, _)| gain > g) {
                    best = Some((gain, feature, (value + values[i + 1].0) / 2.0));
                }
            }
        }
        best.map(|(gain, feature, threshold)| (feature, threshold, gain))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::SparseVector;

    fn vector(dim: usize, pairs: &[(usize, f64)]) -> SparseVector {
        SparseVector::from_pairs(dim, pairs.iter().copied()).unwrap()
    }

    #[test]
    fn gini_matches_hand_formula() {
        assert_eq!(gini_impurity(&[0, 0]), 0.0);
        assert_eq!(gini_impurity(&[4, 0]), 0.0);
        assert!((gini_impurity(&[1, 1]) - 0.5).abs() < 1e-15);
        // 1 - (0.25^2 + 0.75^2) = 0.375
        assert!((gini_impurity(&[1, 3]) - 0.375).abs() < 1e-15);
        // Three classes, uniform: 1 - 3*(1/3)^2 = 2/3.
        assert!((gini_impurity(&[2, 2, 2]) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn pure_data_grows_single_leaves() {
        let data: Vec<(SparseVector, usize)> =
            (0..10).map(|i| (vector(3, &[(0, i as f64)]), 1)).collect();
        let config = ForestConfig { trees: 5, ..ForestConfig::default() };
        let model = train_forest(&data, 2, &config).unwrap();
        for tree in &model.trees {
            assert_eq!(tree.nodes.len(), 1);
            assert!(matches!(tree.nodes[0], TreeNode::Leaf { .. }));
        }
        assert_eq!(model.predict(&vector(3, &[])).unwrap(), 1);
    }

    #[test]
    fn single_tree_root_matches_exhaustive_split_oracle() {
        // One feature; classes separate at value 2.5.
        let mut data = Vec::new();
        for v in [0.0, 1.0, 2.0] {
            data.push((vector(1, &[(0, v)]), 0));
        }
        for v in [3.0, 4.0, 5.0] {
            data.push((vector(1, &[(0, v)]), 1));
        }
        let config = ForestConfig {
            trees: 1,
            min_leaf: 1,
            feature_subsample: FeatureSubsample::All,
            seed: 4,
            ..ForestConfig::default()
        };
        let model = train_forest(&data, 2, &config).unwrap();
        let TreeNode::Split { feature, threshold, .. } = model.trees[0].nodes[0] else {
            panic!("root must split");
        };
        assert_eq!(feature, 0);

        // Replay the documented per-tree bootstrap (seed derived from the
        // tree index) and search every candidate midpoint by brute force.
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, 0));
        let sample: Vec<usize> = (0..data.len()).map(|_| rng.gen_range(0..data.len())).collect();
        let mut values: Vec<(f64, usize)> =
            sample.iter().map(|&i| (data[i].0.get(0), data[i].1)).collect();
        values.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let parent: Vec<usize> = values.iter().fold(vec![0, 0], |mut acc, &(_, y)| {
            acc[y] += 1;
            acc
        });
        let mut best: Option<(f64, f64)> = None; // (gain, threshold)
        for i in 0..values.len() - 1 {
            if values[i].0 == values[i + 1].0 {
                continue;
            }
            let mid = (values[i].0 + values[i + 1].0) / 2.0;
            let mut left = vec![0usize, 0];
            let mut right = vec![0usize, 0];
            for &(v, y) in &values {
                if v <= mid {
                    left[y] += 1;
                } else {
                    right[y] += 1;
                }
            }
            let n = values.len() as f64;
            let nl: usize = left.iter().sum();
            let nr: usize = right.iter().sum();
            let gain = gini_impurity(&parent)
                - (nl as f64 * gini_impurity(&left) + nr as f64 * gini_impurity(&right)) / n;
            if best.is_none_or(|(g, _)| gain > g) {
                best = Some((gain, mid));
            }
        }
        let (_, oracle_threshold) = best.expect("a split exists");
        assert_eq!(threshold, oracle_threshold);
        assert_eq!(model.predict(&vector(1, &[(0, 0.5)])).unwrap(), 0);
        assert_eq!(model.predict(&vector(1, &[(0, 4.5)])).unwrap(), 1);
    }

    #[test]
    fn same_seed_same_forest() {
        let data: Vec<(SparseVector, usize)> = (0..30)
            .map(|i| (vector(4, &[(i % 4, (i % 7) as f64)]), i % 3))
            .collect();
        let config = ForestConfig { trees: 8, ..ForestConfig::default() };
        let a = train_forest(&data, 3, &config).unwrap();
        let b = train_forest(&data, 3, &config).unwrap();
        assert_eq!(a.trees, b.trees);
    }

    #[test]
    fn threading_does_not_change_the_forest() {
        let data: Vec<(SparseVector, usize)> = (0..40)
            .map(|i| (vector(5, &[(i % 5, (i % 9) as f64)]), i % 2))
            .collect();
        let config = ForestConfig { trees: 6, ..ForestConfig::default() };
        let single = train_forest_threaded(&data, 2, &config, 1).unwrap();
        let multi = train_forest_threaded(&data, 2, &config, 4).unwrap();
        assert_eq!(single.trees, multi.trees);
    }

    #[test]
    fn zero_trees_is_an_error() {
        let data = vec![(vector(1, &[(0, 1.0)]), 0)];
        let config = ForestConfig { trees: 0, ..ForestConfig::default() };
        assert!(train_forest(&data, 1, &config).is_err());
    }

    #[test]
    fn tie_breaks_to_lowest_class() {
        let model = ForestModel {
            trees: vec![Tree { nodes: vec![TreeNode::Leaf { counts: vec![3, 3] }] }],
            num_classes: 2,
            dim: 1,
            config: ForestConfig::default(),
        };
        assert_eq!(model.predict(&vector(1, &[])).unwrap(), 0);
    }

    #[test]
    fn save_load_round_trip_is_exact() {
        let data: Vec<(SparseVector, usize)> =
            (0..20).map(|i| (vector(3, &[(i % 3, i as f64)]), i % 2)).collect();
        let config = ForestConfig { trees: 3, ..ForestConfig::default() };
        let model = train_forest(&data, 2, &config).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("forest.json");
        model.save(&path).unwrap();
        let back = ForestModel::load(&path).unwrap();
        assert_eq!(back.trees, model.trees);
        assert_eq!(back.num_classes, model.num_classes);
    }
}
