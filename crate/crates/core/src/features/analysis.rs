//! Per-class top-feature ranking and source/emoji cross-tabulation.

use serde::{Deserialize, Serialize};

use super::{bow_vector, BowWeighting, SparseVector, Vocabulary, PAD_ID, UNK_ID};
use crate::baselines::forest::{train_forest, FeatureSubsample, ForestConfig};
use crate::baselines::linear::{train_linear, LinearConfig};
use crate::corpus::LabeledExample;
use crate::error::{Error, Result};
use crate::textprep::SourceTable;
use crate::util::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankMethod {
    /// One-vs-rest random forest, ranked by Gini importance.
    OvrForestImportance,
    /// One-vs-rest linear SVM, ranked by largest positive weights.
    OvrLinearWeights,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureField {
    Text,
    Hashtags,
}

#[derive(Debug, Clone)]
pub struct RankConfig {
    pub method: RankMethod,
    pub trees: usize,
    pub max_depth: usize,
    pub seed: u64,
}

impl Default for RankConfig {
    fn default() -> Self {
        Self { method: RankMethod::OvrForestImportance, trees: 30, max_depth: 12, seed: 0 }
    }
}

/// Ranked tokens per class plus warnings for degenerate classes.
#[derive(Debug, Clone)]
pub struct TopFeatures {
    pub per_class: Vec<Vec<(String, f64)>>,
    pub warnings: Vec<String>,
}

fn field_tokens(example: &LabeledExample, field: FeatureField) -> &[String] {
    match field {
        FeatureField::Text => &example.text_tokens,
        FeatureField::Hashtags => &example.hashtag_tokens,
    }
}

/// Fits a one-vs-rest model per class on bag-of-words vectors of the chosen
/// field and returns its top-k tokens, excluding the reserved entries.
/// Classes with no positive or no negative examples rank nothing and are
/// reported in the warnings.
pub fn top_features_per_class(
    examples: &[LabeledExample],
    field: FeatureField,
    vocab: &Vocabulary,
    num_classes: usize,
    k: usize,
    config: &RankConfig,
) -> Result<TopFeatures> {
    if k == 0 {
        return Err(Error::InvalidParam("top-k must be >= 1".into()));
    }
    let vectors: Vec<SparseVector> = examples
        .iter()
        .map(|ex| bow_vector(field_tokens(ex, field), vocab, BowWeighting::Count))
        .collect();

    let mut per_class = Vec::with_capacity(num_classes);
    let mut warnings = Vec::new();
    for class in 0..num_classes {
        let positives = examples.iter().filter(|ex| ex.label == class).count();
        if positives == 0 || positives == examples.len() {
            warnings.push(format!(
                "class {class}: degenerate one-vs-rest problem ({positives} of {} positive)",
                examples.len()
            ));
            per_class.push(Vec::new());
            continue;
        }
        let binary: Vec<(SparseVector, usize)> = vectors
            .iter()
            .cloned()
            .zip(examples.iter().map(|ex| usize::from(ex.label == class)))
            .collect();
        let scores = match config.method {
            RankMethod::OvrForestImportance => {
                let forest_config = ForestConfig {
                    trees: config.trees,
                    max_depth: config.max_depth,
                    min_leaf: 1,
                    feature_subsample: FeatureSubsample::Sqrt,
                    seed: derive_seed(config.seed, class as u64),
                };
                train_forest(&binary, 2, &forest_config)?.feature_importances()
            }
            RankMethod::OvrLinearWeights => {
                let linear_config =
                    LinearConfig { seed: derive_seed(config.seed, class as u64), ..LinearConfig::default() };
                let model = train_linear(&binary, 2, &linear_config)?;
                model.weights[1]
                    .iter()
                    .zip(&model.weights[0])
                    .map(|(pos, rest)| pos - rest)
                    .collect()
            }
        };
        let mut ranked: Vec<(String, f64)> = scores
            .iter()
            .enumerate()
            .filter(|&(id, &score)| id != PAD_ID && id != UNK_ID && score > 0.0)
            .map(|(id, &score)| (vocab.token(id).to_string(), score))
            .collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        ranked.truncate(k);
        per_class.push(ranked);
    }
    Ok(TopFeatures { per_class, warnings })
}

/// Per-source label counts with top-m labels per source and an overall source
/// frequency ranking.
#[derive(Debug, Clone, Serialize)]
pub struct Crosstab {
    pub source_names: Vec<String>,
    /// counts[source][label]
    pub counts: Vec<Vec<usize>>,
    pub source_totals: Vec<usize>,
    /// Per source: up to m `(label, count)` pairs, count descending then
    /// label ascending; zero counts excluded.
    pub top_by_source: Vec<Vec<(usize, usize)>>,
    /// Source ids sorted by total descending, name ascending.
    pub source_ranking: Vec<usize>,
}

pub fn source_emoji_crosstab(
    examples: &[LabeledExample],
    sources: &SourceTable,
    num_classes: usize,
    top_m: usize,
) -> Result<Crosstab> {
    if top_m == 0 {
        return Err(Error::InvalidParam("top_m must be >= 1".into()));
    }
    let s = sources.len();
    let mut counts = vec![vec![0usize; num_classes]; s];
    for ex in examples {
        if ex.source_id >= s {
            return Err(Error::IdOutOfRange { id: ex.source_id, size: s });
        }
        if ex.label >= num_classes {
            return Err(Error::IdOutOfRange { id: ex.label, size: num_classes });
        }
        counts[ex.source_id][ex.label] += 1;
    }
    let source_totals: Vec<usize> = counts.iter().map(|row| row.iter().sum()).collect();
    let top_by_source: Vec<Vec<(usize, usize)>> = counts
        .iter()
        .map(|row| {
            let mut labeled: Vec<(usize, usize)> = row
                .iter()
                .enumerate()
                .filter(|&(_, &count)| count > 0)
                .map(|(label, &count)| (label, count))
                .collect();
            labeled.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            labeled.truncate(top_m);
            labeled
        })
        .collect();
    let mut source_ranking: Vec<usize> = (0..s).collect();
    source_ranking.sort_by(|&a, &b| {
        source_totals[b]
            .cmp(&source_totals[a])
            .then_with(|| sources.name(a).cmp(sources.name(b)))
    });
    Ok(Crosstab {
        source_names: sources.names().to_vec(),
        counts,
        source_totals,
        top_by_source,
        source_ranking,
    })
}
