//! Subcommand implementations and shared plumbing.

pub mod evaluate;
pub mod gen;
pub mod ingest;
pub mod predict;
pub mod stats;
pub mod suite;
pub mod train;

use std::path::{Path, PathBuf};

use emopred::corpus::{balance, split, BalanceStrategy, DatasetSplit, LabelSet, LabeledExample};
use emopred::eval::experiment::{prepare, PreparedData};
use emopred::neural::VocabHashes;
use emopred::textprep::SourceTable;

use crate::config::RunConfig;

/// Exit codes: 1 bad user input, 2 missing resource, 3 consistency violation.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn input(message: impl Into<String>) -> Self {
        Self { code: 1, message: message.into() }
    }

    pub fn missing(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn inconsistent(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }
}

impl From<emopred::Error> for CliError {
    fn from(err: emopred::Error) -> Self {
        let code = match &err {
            emopred::Error::Io(_) => 2,
            emopred::Error::IncompatibleCheckpoint(_) => 3,
            _ => 1,
        };
        Self { code, message: err.to_string() }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        Self { code: 2, message: err.to_string() }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(err: anyhow::Error) -> Self {
        Self { code: 1, message: format!("{err:#}") }
    }
}

pub type CmdResult = Result<(), CliError>;

/// Fails with exit code 2 when a required input is absent.
pub fn require(path: &Path, what: &str) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::missing(format!("{what} not found: {}", path.display())))
    }
}

/// Fixed output filenames under the run's output directory.
pub struct Artifacts {
    out_dir: PathBuf,
}

impl Artifacts {
    pub fn new(out_dir: &Path) -> Self {
        Self { out_dir: out_dir.to_path_buf() }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.out_dir.join(name)
    }

    pub fn dir(&self) -> &Path {
        &self.out_dir
    }

    pub fn labeled(&self) -> PathBuf {
        self.path("labeled.jsonl")
    }

    pub fn label_set(&self) -> PathBuf {
        self.path("label_set.txt")
    }

    pub fn lexicon(&self) -> PathBuf {
        self.path("lexicon.tsv")
    }

    pub fn sources(&self) -> PathBuf {
        self.path("sources.txt")
    }

    pub fn source_aliases(&self) -> PathBuf {
        self.path("source_aliases.tsv")
    }

    pub fn ingest_summary(&self) -> PathBuf {
        self.path("ingest_summary.json")
    }

    pub fn label_distribution(&self) -> PathBuf {
        self.path("label_distribution.csv")
    }

    pub fn source_distribution(&self) -> PathBuf {
        self.path("source_distribution.csv")
    }

    pub fn source_top_emoji(&self) -> PathBuf {
        self.path("source_top_emoji.csv")
    }

    pub fn top_features_text(&self) -> PathBuf {
        self.path("top_features_text.csv")
    }

    pub fn top_features_hashtags(&self) -> PathBuf {
        self.path("top_features_hashtags.csv")
    }

    pub fn text_vocab(&self) -> PathBuf {
        self.path("text_vocab.tsv")
    }

    pub fn hashtag_vocab(&self) -> PathBuf {
        self.path("hashtag_vocab.tsv")
    }

    pub fn checkpoint(&self) -> PathBuf {
        self.path("checkpoint.json")
    }

    pub fn baseline_model(&self) -> PathBuf {
        self.path("model.json")
    }

    pub fn history(&self) -> PathBuf {
        self.path("history.csv")
    }

    pub fn metrics(&self) -> PathBuf {
        self.path("metrics.json")
    }

    pub fn suite_csv(&self) -> PathBuf {
        self.path("suite.csv")
    }

    pub fn suite_table(&self) -> PathBuf {
        self.path("suite.txt")
    }

    pub fn synthetic(&self) -> PathBuf {
        self.path("synthetic.jsonl")
    }
}

/// The fitted pipeline state written by `ingest`. The segmentation lexicon
/// is not loaded here; hashtags in the labeled dataset are already segmented.
pub struct Fitted {
    pub examples: Vec<LabeledExample>,
    pub label_set: LabelSet,
    pub sources: SourceTable,
}

/// Loads the labeled dataset and the fitted tables from the output directory.
pub fn load_fitted(artifacts: &Artifacts) -> Result<Fitted, CliError> {
    require(&artifacts.labeled(), "labeled dataset (run `ingest` first)")?;
    require(&artifacts.label_set(), "label set file")?;
    require(&artifacts.sources(), "source table")?;
    let label_set = LabelSet::from_file(&artifacts.label_set())?;
    let sources = SourceTable::from_files(&artifacts.sources(), &artifacts.source_aliases())?;
    let examples = emopred::pipeline::read_labeled_jsonl(&artifacts.labeled(), &label_set, &sources)?;
    Ok(Fitted { examples, label_set, sources })
}

/// Applies the configured balance strategy, then the stratified split.
pub fn build_split(
    config: &RunConfig,
    examples: Vec<LabeledExample>,
) -> Result<DatasetSplit, CliError> {
    let balanced = match config.balance.strategy.as_str() {
        "median" => balance(examples, BalanceStrategy::DownsampleToMedian, config.seed)?,
        "cap" => balance(examples, BalanceStrategy::DownsampleToCap(config.balance.cap), config.seed)?,
        _ => examples,
    };
    let ratios = (config.split.train, config.split.dev, config.split.test);
    let (split, warnings) = split(balanced, ratios, config.seed)?;
    for warning in warnings {
        log::warn!("{warning}");
    }
    Ok(split)
}

pub fn prepare_data(
    config: &RunConfig,
    split: &DatasetSplit,
    num_classes: usize,
    num_sources: usize,
) -> Result<PreparedData, CliError> {
    Ok(prepare(split, num_classes, num_sources, &config.encode)?)
}

/// Vocabulary hashes of the prepared data plus the fitted source table.
pub fn vocab_hashes(data: &PreparedData, sources: &SourceTable) -> VocabHashes {
    VocabHashes {
        text: data.text_vocab.stable_hash(),
        hashtags: data.hashtag_vocab.stable_hash(),
        sources: sources.stable_hash(),
    }
}

pub fn write_file(path: &Path, content: &[u8]) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(path, content)?;
    Ok(())
}
