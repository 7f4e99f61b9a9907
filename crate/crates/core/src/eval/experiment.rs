//! Experiment configs, the per-row runner, and comparison-table reporting.

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::evaluate;
use crate::baselines::{train_forest, train_linear, ForestConfig, LinearConfig};
use crate::corpus::{DatasetSplit, LabeledExample};
use crate::error::{Error, Result};
use crate::features::{
    bow_vector, encode_example, BowWeighting, EncodedExample, SparseVector, Vocabulary,
};
use crate::neural::{train as train_bilstm, FeatureFlags, TrainConfig, VocabDims};
use crate::util::{derive_seed, stable_hash_hex};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Forest,
    Linear,
    Bilstm,
}

impl ModelKind {
    pub fn display_name(&self) -> &'static str {
        match self {
            ModelKind::Forest => "RandomForest",
            ModelKind::Linear => "LinearSVC",
            ModelKind::Bilstm => "BiLSTM",
        }
    }
}

/// One experiment row: model kind, dataset variant, feature flags, and all
/// hyperparameters. The outer `seed` and `flags` override the nested model
/// configs when the row runs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub label: String,
    pub model: ModelKind,
    pub dataset: String,
    pub flags: FeatureFlags,
    pub seed: u64,
    pub linear: LinearConfig,
    pub forest: ForestConfig,
    pub bilstm: TrainConfig,
}

impl ExperimentConfig {
    pub fn config_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        stable_hash_hex(json.as_bytes())
    }
}

/// Vocabulary fitting and length limits for encoding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncodeConfig {
    pub max_len: usize,
    pub text_min_freq: usize,
    pub text_max_size: usize,
    pub hashtag_min_freq: usize,
    pub hashtag_max_size: usize,
}

impl Default for EncodeConfig {
    fn default() -> Self {
        Self {
            max_len: 32,
            text_min_freq: 2,
            text_max_size: 20_000,
            hashtag_min_freq: 2,
            hashtag_max_size: 20_000,
        }
    }
}

/// Vocabularies plus encoded and bag-of-words views of one dataset variant.
pub struct PreparedData {
    pub text_vocab: Vocabulary,
    pub hashtag_vocab: Vocabulary,
    pub num_classes: usize,
    pub num_sources: usize,
    pub train: Vec<EncodedExample>,
    pub dev: Vec<EncodedExample>,
    pub test: Vec<EncodedExample>,
    pub bow_train: Vec<(SparseVector, usize)>,
    pub bow_test: Vec<(SparseVector, usize)>,
}

impl PreparedData {
    pub fn vocab_dims(&self) -> VocabDims {
        VocabDims {
            text: self.text_vocab.len(),
            hashtags: self.hashtag_vocab.len(),
            sources: self.num_sources,
            classes: self.num_classes,
        }
    }
}

/// Fits vocabularies on the train split only and encodes all splits.
pub fn prepare(
    split: &DatasetSplit,
    num_classes: usize,
    num_sources: usize,
    config: &EncodeConfig,
) -> Result<PreparedData> {
    let text_vocab = Vocabulary::fit(
        split.train.iter().flat_map(|ex| ex.text_tokens.iter().map(String::as_str)),
        config.text_min_freq,
        config.text_max_size,
    )?;
    let hashtag_vocab = Vocabulary::fit(
        split.train.iter().flat_map(|ex| ex.hashtag_tokens.iter().map(String::as_str)),
        config.hashtag_min_freq,
        config.hashtag_max_size,
    )?;
    let encode_all = |examples: &[LabeledExample]| -> Result<Vec<EncodedExample>> {
        examples
            .iter()
            .map(|ex| encode_example(ex, &text_vocab, &hashtag_vocab, config.max_len))
            .collect()
    };
    let bow_all = |examples: &[LabeledExample]| -> Vec<(SparseVector, usize)> {
        examples
            .iter()
            .map(|ex| (bow_vector(&ex.text_tokens, &text_vocab, BowWeighting::Count), ex.label))
            .collect()
    };
    Ok(PreparedData {
        num_classes,
        num_sources,
        train: encode_all(&split.train)?,
        dev: encode_all(&split.dev)?,
        test: encode_all(&split.test)?,
        bow_train: bow_all(&split.train),
        bow_test: bow_all(&split.test),
        text_vocab,
        hashtag_vocab,
    })
}

/// One line of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub model: String,
    pub setting: String,
    pub accuracy: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub n_test: usize,
    pub seed: u64,
    pub config_hash: String,
    /// Wall-clock seconds; excluded from the CSV so reruns stay byte-equal.
    pub runtime_secs: f64,
}

/// Trains the configured model on the prepared data and evaluates on test.
pub fn run_experiment(config: &ExperimentConfig, data: &PreparedData) -> Result<ReportRow> {
    if data.test.is_empty() {
        return Err(Error::InvalidParam("empty test split".into()));
    }
    let started = Instant::now();
    let golds: Vec<usize> = data.test.iter().map(|ex| ex.label).collect();
    let preds: Vec<usize> = match config.model {
        ModelKind::Forest => {
            let forest_config = ForestConfig { seed: config.seed, ..config.forest.clone() };
            let model = train_forest(&data.bow_train, data.num_classes, &forest_config)?;
            data.bow_test.iter().map(|(x, _)| model.predict(x)).collect::<Result<_>>()?
        }
        ModelKind::Linear => {
            let linear_config = LinearConfig { seed: config.seed, ..config.linear.clone() };
            let model = train_linear(&data.bow_train, data.num_classes, &linear_config)?;
            data.bow_test.iter().map(|(x, _)| model.predict(x)).collect::<Result<_>>()?
        }
        ModelKind::Bilstm => {
            let bilstm_config = TrainConfig {
                seed: config.seed,
                flags: config.flags,
                ..config.bilstm.clone()
            };
            let (params, _) =
                train_bilstm::<f32>(&data.train, &data.dev, &data.vocab_dims(), &bilstm_config)?;
            data.test
                .iter()
                .map(|ex| crate::neural::predict(&params, ex).map(|(class, _)| class))
                .collect::<Result<_>>()?
        }
    };
    let report = evaluate(&preds, &golds, data.num_classes)?;
    Ok(ReportRow {
        model: config.model.display_name().to_string(),
        setting: config.label.clone(),
        accuracy: report.accuracy,
        macro_precision: report.macro_precision,
        macro_recall: report.macro_recall,
        macro_f1: report.macro_f1,
        n_test: report.n_examples,
        seed: config.seed,
        config_hash: config.config_hash(),
        runtime_secs: started.elapsed().as_secs_f64(),
    })
}

/// Comparison table over several experiment rows.
#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub rows: Vec<ReportRow>,
}

impl SuiteReport {
    /// CSV with the documented column set; metric values at 4 decimals.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "model,setting,accuracy,macro_precision,macro_recall,macro_f1,n_test,seed,config_hash\n",
        );
        for row in &self.rows {
            out.push_str(&format!(
                "{},{},{:.4},{:.4},{:.4},{:.4},{},{},{}\n",
                row.model,
                row.setting,
                row.accuracy,
                row.macro_precision,
                row.macro_recall,
                row.macro_f1,
                row.n_test,
                row.seed,
                row.config_hash
            ));
        }
        out
    }

    /// Aligned plain-text table; the best value in each metric column is
    /// flagged with `*`.
    pub fn to_table(&self) -> String {
        let metric = |row: &ReportRow, col: usize| match col {
            0 => row.accuracy,
            1 => row.macro_precision,
            2 => row.macro_recall,
            _ => row.macro_f1,
        };
        let best: Vec<f64> = (0..4)
            .map(|col| {
                self.rows.iter().map(|r| metric(r, col)).fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        let mut cells: Vec<[String; 6]> = vec![[
            "Model".into(),
            "Setting".into(),
            "Acc".into(),
            "Prec".into(),
            "Rec".into(),
            "F1".into(),
        ]];
        for row in &self.rows {
            let mut line = [
                row.model.clone(),
                row.setting.clone(),
                String::new(),
                String::new(),
                String::new(),
                String::new(),
            ];
            for col in 0..4 {
                let value = metric(row, col);
                let flag = if value == best[col] { "*" } else { "" };
                line[col + 2] = format!("{value:.4}{flag}");
            }
            cells.push(line);
        }
        let widths: Vec<usize> = (0..6)
            .map(|c| cells.iter().map(|row| row[c].len()).max().unwrap_or(0))
            .collect();
        let mut out = String::new();
        for row in &cells {
            let line: Vec<String> = row
                .iter()
                .enumerate()
                .map(|(c, cell)| format!("{cell:<width$}", width = widths[c]))
                .collect();
            out.push_str(line.join("  ").trim_end());
            out.push('\n');
        }
        out
    }
}

/// Runs every `(config, data)` pair in order.
pub fn run_suite<'a>(
    runs: impl IntoIterator<Item = (&'a ExperimentConfig, &'a PreparedData)>,
) -> Result<SuiteReport> {
    let mut rows = Vec::new();
    for (config, data) in runs {
        log::info!("running {} / {}", config.model.display_name(), config.label);
        rows.push(run_experiment(config, data)?);
    }
    Ok(SuiteReport { rows })
}

/// Imbalanced variant of a labeled dataset: class `c` keeps roughly a
/// `1/(c+1)` share (at least 15%), mimicking a skewed label distribution.
/// Deterministic under `seed`.
pub fn semeval_style_subsample(examples: &[LabeledExample], seed: u64) -> Vec<LabeledExample> {
    let mut by_class: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for (i, ex) in examples.iter().enumerate() {
        by_class.entry(ex.label).or_default().push(i);
    }
    let mut keep = vec![false; examples.len()];
    for (&class, indices) in &by_class {
        let share = (1.0 / (class + 1) as f64).max(0.15);
        let target = ((indices.len() as f64 * share).ceil() as usize).max(1);
        let mut shuffled = indices.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, class as u64));
        shuffled.shuffle(&mut rng);
        for &i in shuffled.iter().take(target) {
            keep[i] = true;
        }
    }
    examples
        .iter()
        .zip(&keep)
        .filter(|&(_, &k)| k)
        .map(|(ex, _)| ex.clone())
        .collect()
}
