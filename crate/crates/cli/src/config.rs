//! Run configuration: one TOML file, every value overridable from the
//! command line by its dotted name (`--set section.key=value`).

use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context};
use serde::{Deserialize, Serialize};

use emopred::baselines::{ForestConfig, LinearConfig};
use emopred::corpus::LabelPolicy;
use emopred::eval::experiment::{EncodeConfig, ModelKind};
use emopred::features::analysis::RankMethod;
use emopred::neural::{FeatureFlags, TrainConfig};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    pub pipeline: PipelineSection,
    pub split: SplitSection,
    pub balance: BalanceSection,
    pub encode: EncodeConfig,
    pub linear: LinearConfig,
    pub forest: ForestConfig,
    pub bilstm: BilstmSection,
    pub experiment: ExperimentSection,
    pub stats: StatsSection,
    pub predict: PredictSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 42,
            paths: Paths::default(),
            pipeline: PipelineSection::default(),
            split: SplitSection::default(),
            balance: BalanceSection::default(),
            encode: EncodeConfig::default(),
            linear: LinearConfig::default(),
            forest: ForestConfig::default(),
            bilstm: BilstmSection::default(),
            experiment: ExperimentSection::default(),
            stats: StatsSection::default(),
            predict: PredictSection::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus: PathBuf,
    pub out_dir: PathBuf,
    /// Optional external segmentation lexicon (word<TAB>count).
    pub lexicon: Option<PathBuf>,
    /// Optional extra source aliases (raw alias<TAB>canonical).
    pub source_aliases: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            corpus: PathBuf::from("corpus.jsonl"),
            out_dir: PathBuf::from("out"),
            lexicon: None,
            source_aliases: None,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineSection {
    pub label_policy: LabelPolicy,
    pub class_count: usize,
    pub source_top_k: usize,
}

impl Default for PipelineSection {
    fn default() -> Self {
        Self { label_policy: LabelPolicy::First, class_count: 20, source_top_k: 10 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSection {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitSection {
    fn default() -> Self {
        Self { train: 0.8, dev: 0.1, test: 0.1 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BalanceSection {
    /// "none", "median", or "cap".
    pub strategy: String,
    /// Cap used when strategy = "cap".
    pub cap: usize,
}

impl Default for BalanceSection {
    fn default() -> Self {
        Self { strategy: "none".into(), cap: 0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BilstmSection {
    pub embed_dim: usize,
    pub source_embed_dim: usize,
    pub hidden_dim: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub clip_norm: f64,
}

impl Default for BilstmSection {
    fn default() -> Self {
        let base = TrainConfig::default();
        Self {
            embed_dim: base.embed_dim,
            source_embed_dim: base.source_embed_dim,
            hidden_dim: base.hidden_dim,
            learning_rate: base.learning_rate,
            batch_size: base.batch_size,
            max_epochs: base.max_epochs,
            patience: base.patience,
            clip_norm: base.clip_norm,
        }
    }
}

impl BilstmSection {
    pub fn train_config(&self, seed: u64, flags: FeatureFlags) -> TrainConfig {
        TrainConfig {
            embed_dim: self.embed_dim,
            source_embed_dim: self.source_embed_dim,
            hidden_dim: self.hidden_dim,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            max_epochs: self.max_epochs,
            patience: self.patience,
            clip_norm: self.clip_norm,
            seed,
            flags,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub model: ModelKind,
    pub label: String,
    pub dataset: String,
    pub use_hashtags: bool,
    pub use_source: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            model: ModelKind::Bilstm,
            label: "Text".into(),
            dataset: "complete".into(),
            use_hashtags: false,
            use_source: false,
        }
    }
}

impl ExperimentSection {
    pub fn flags(&self) -> FeatureFlags {
        FeatureFlags::new(self.use_hashtags, self.use_source)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsSection {
    pub top_features_k: usize,
    pub top_emoji_m: usize,
    pub method: RankMethod,
}

impl Default for StatsSection {
    fn default() -> Self {
        Self { top_features_k: 5, top_emoji_m: 5, method: RankMethod::OvrForestImportance }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PredictSection {
    pub top_k: usize,
}

impl Default for PredictSection {
    fn default() -> Self {
        Self { top_k: 5 }
    }
}

/// Loads the TOML config and applies `--set key=value` overrides by dotted
/// path. Unknown keys anywhere are rejected.
pub fn load_config(path: &Path, overrides: &[String]) -> anyhow::Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read config {}", path.display()))?;
    parse_config(&text, overrides)
}

pub fn parse_config(text: &str, overrides: &[String]) -> anyhow::Result<RunConfig> {
    let mut value: toml::Value =
        text.parse().context("config is not valid TOML")?;
    for entry in overrides {
        let (key, raw) = entry
            .split_once('=')
            .ok_or_else(|| anyhow!("--set expects KEY=VALUE, got {entry:?}"))?;
        apply_override(&mut value, key.trim(), raw.trim())?;
    }
    let config: RunConfig = value.try_into().context("invalid configuration")?;
    validate(&config)?;
    Ok(config)
}

fn apply_override(root: &mut toml::Value, dotted: &str, raw: &str) -> anyhow::Result<()> {
    let parts: Vec<&str> = dotted.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        bail!("bad override key {dotted:?}");
    }
    let mut node = root;
    for part in &parts[..parts.len() - 1] {
        let table = node
            .as_table_mut()
            .ok_or_else(|| anyhow!("{dotted:?} does not address a table"))?;
        node = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    let table = node
        .as_table_mut()
        .ok_or_else(|| anyhow!("{dotted:?} does not address a table"))?;
    table.insert(parts[parts.len() - 1].to_string(), parse_scalar(raw));
    Ok(())
}

/// Bare override values: try bool, integer, float; fall back to string.
fn parse_scalar(raw: &str) -> toml::Value {
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    toml::Value::String(raw.to_string())
}

fn validate(config: &RunConfig) -> anyhow::Result<()> {
    if config.pipeline.class_count == 0 {
        bail!("pipeline.class_count must be >= 1");
    }
    if !matches!(config.balance.strategy.as_str(), "none" | "median" | "cap") {
        bail!("balance.strategy must be none, median, or cap (got {:?})", config.balance.strategy);
    }
    if config.balance.strategy == "cap" && config.balance.cap == 0 {
        bail!("balance.cap must be >= 1 when strategy = \"cap\"");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_parse_from_empty_config() {
        let config = parse_config("", &[]).unwrap();
        assert_eq!(config.seed, 42);
        assert_eq!(config.pipeline.class_count, 20);
        assert_eq!(config.encode.max_len, 32);
    }

    #[test]
    fn overrides_apply_by_dotted_name() {
        let config = parse_config(
            "seed = 1\n[pipeline]\nclass_count = 4\n",
            &[
                "seed=9".to_string(),
                "pipeline.label_policy=only".to_string(),
                "encode.max_len=16".to_string(),
                "experiment.use_source=true".to_string(),
            ],
        )
        .unwrap();
        assert_eq!(config.seed, 9);
        assert_eq!(config.pipeline.class_count, 4);
        assert_eq!(config.pipeline.label_policy, LabelPolicy::Only);
        assert_eq!(config.encode.max_len, 16);
        assert!(config.experiment.use_source);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse_config("[pipeline]\nbogus = 1\n", &[]).is_err());
        assert!(parse_config("", &["pipeline.bogus=1".to_string()]).is_err());
        assert!(parse_config("top_level_bogus = 1\n", &[]).is_err());
    }

    #[test]
    fn bad_strategy_is_rejected() {
        assert!(parse_config("[balance]\nstrategy = \"upsample\"\n", &[]).is_err());
        assert!(parse_config("[balance]\nstrategy = \"cap\"\n", &[]).is_err());
        assert!(parse_config("[balance]\nstrategy = \"cap\"\ncap = 3\n", &[]).is_ok());
    }
}
