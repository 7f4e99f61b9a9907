//! Corpus ingestion, labeling, balancing, and splitting.

pub mod synthetic;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::emoji::scan_emojis;
use crate::error::{Error, Result};
use crate::util::derive_seed;

/// Classes holding less than this share of the corpus are flagged minority.
pub const MINORITY_PCT: f64 = 3.0;

/// One ingested tweet record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawTweet {
    pub id: String,
    pub text: String,
    #[serde(default, rename = "created_at", skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<String>,
    #[serde(default)]
    pub is_retweet: bool,
}

/// Ordered emoji label list; the position of an emoji is its class id.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelSet {
    emojis: Vec<String>,
    counts: Vec<u64>,
    ids: HashMap<String, usize>,
}

impl LabelSet {
    /// A label set from an ordered emoji list (counts unknown, stored as 0).
    pub fn from_emojis(emojis: Vec<String>) -> Self {
        Self::from_ranked(emojis.into_iter().map(|e| (e, 0)).collect())
    }

    fn from_ranked(ranked: Vec<(String, u64)>) -> Self {
        let (emojis, counts): (Vec<_>, Vec<_>) = ranked.into_iter().unzip();
        let ids = emojis
            .iter()
            .enumerate()
            .map(|(i, e)| (e.clone(), i))
            .collect();
        Self { emojis, counts, ids }
    }

    pub fn emojis(&self) -> &[String] {
        &self.emojis
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn id_of(&self, emoji: &str) -> Option<usize> {
        self.ids.get(emoji).copied()
    }

    pub fn emoji(&self, id: usize) -> &str {
        &self.emojis[id]
    }

    pub fn len(&self) -> usize {
        self.emojis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.emojis.is_empty()
    }

    /// One emoji per line; the line number is the class id.
    pub fn write_to(&self, out: &mut impl Write) -> Result<()> {
        for emoji in &self.emojis {
            writeln!(out, "{emoji}")?;
        }
        Ok(())
    }

    /// Reads a label-set file. Counts are not stored in the file and load as
    /// zero.
    pub fn from_file(path: &Path) -> Result<Self> {
        let emojis: Vec<String> = std::fs::read_to_string(path)?
            .lines()
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty())
            .collect();
        Ok(Self::from_emojis(emojis))
    }
}

/// Classifier-ready record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledExample {
    pub tweet_id: String,
    pub label: usize,
    pub text_tokens: Vec<String>,
    pub hashtag_tokens: Vec<String>,
    pub source_id: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

/// Stratified train/dev/test partition.
#[derive(Debug, Clone)]
pub struct DatasetSplit {
    pub train: Vec<LabeledExample>,
    pub dev: Vec<LabeledExample>,
    pub test: Vec<LabeledExample>,
    pub seed: u64,
}

/// Result of reading a JSONL corpus file.
#[derive(Debug)]
pub struct LoadedCorpus {
    pub tweets: Vec<RawTweet>,
    pub skipped_lines: usize,
}

/// Reads a JSONL corpus: one tweet object per line, input order preserved.
/// Malformed lines (bad JSON, missing/empty id or text field) are skipped and
/// counted; blank lines are ignored.
pub fn load_corpus(path: &Path) -> Result<LoadedCorpus> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut tweets = Vec::new();
    let mut skipped_lines = 0;
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<RawTweet>(&line) {
            Ok(tweet) if !tweet.id.is_empty() => tweets.push(tweet),
            _ => skipped_lines += 1,
        }
    }
    Ok(LoadedCorpus { tweets, skipped_lines })
}

/// Per-reason drop counts from [`filter_records`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FilterStats {
    pub retweets: usize,
    pub empty_text: usize,
    pub rt_prefix: usize,
    pub duplicate_ids: usize,
}

impl FilterStats {
    pub fn total(&self) -> usize {
        self.retweets + self.empty_text + self.rt_prefix + self.duplicate_ids
    }
}

/// Drops retweets, empty/whitespace-only texts, `RT @` prefixed texts, and
/// duplicate ids (first occurrence kept). Idempotent.
pub fn filter_records(tweets: Vec<RawTweet>) -> (Vec<RawTweet>, FilterStats) {
    let mut stats = FilterStats::default();
    let mut seen: HashSet<String> = HashSet::new();
    let mut kept = Vec::with_capacity(tweets.len());
    for tweet in tweets {
        if tweet.is_retweet {
            stats.retweets += 1;
        } else if tweet.text.trim().is_empty() {
            stats.empty_text += 1;
        } else if tweet.text.starts_with("RT @") {
            stats.rt_prefix += 1;
        } else if !seen.insert(tweet.id.clone()) {
            stats.duplicate_ids += 1;
        } else {
            kept.push(tweet);
        }
    }
    (kept, stats)
}

/// The `c` most frequent emoji clusters (by occurrence, ties broken by
/// ascending codepoint sequence).
pub fn derive_label_set(tweets: &[RawTweet], c: usize) -> Result<LabelSet> {
    if c == 0 {
        return Err(Error::InvalidParam("label set size must be >= 1".into()));
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    for tweet in tweets {
        for emoji in scan_emojis(&tweet.text) {
            *counts.entry(emoji).or_insert(0) += 1;
        }
    }
    if counts.len() < c {
        return Err(Error::NotEnoughEmojis { found: counts.len(), requested: c });
    }
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(c);
    Ok(LabelSet::from_ranked(ranked))
}

/// How a tweet containing several label emojis is assigned a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelPolicy {
    /// First in-set emoji by text position.
    First,
    /// A label only when exactly one distinct in-set emoji occurs.
    Only,
}

impl std::str::FromStr for LabelPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(Self::First),
            "only" => Ok(Self::Only),
            other => Err(Error::InvalidParam(format!("unknown label policy {other:?}"))),
        }
    }
}

/// Class id for a tweet, or `None` when the policy yields no label.
pub fn extract_label(tweet: &RawTweet, labels: &LabelSet, policy: LabelPolicy) -> Option<usize> {
    let in_set: Vec<usize> = scan_emojis(&tweet.text)
        .iter()
        .filter_map(|e| labels.id_of(e))
        .collect();
    match policy {
        LabelPolicy::First => in_set.first().copied(),
        LabelPolicy::Only => {
            let distinct: HashSet<usize> = in_set.iter().copied().collect();
            (distinct.len() == 1).then(|| in_set[0])
        }
    }
}

/// Per-class counts, percentages, and minority flags (< 3% of the corpus).
#[derive(Debug, Clone, Serialize)]
pub struct Distribution {
    pub counts: Vec<usize>,
    pub percentages: Vec<f64>,
    pub minority: Vec<bool>,
}

pub fn class_distribution<'a>(
    examples: impl IntoIterator<Item = &'a LabeledExample>,
    c: usize,
) -> Distribution {
    let mut counts = vec![0usize; c];
    for ex in examples {
        counts[ex.label] += 1;
    }
    let n: usize = counts.iter().sum();
    let percentages: Vec<f64> = counts
        .iter()
        .map(|&k| if n == 0 { 0.0 } else { 100.0 * k as f64 / n as f64 })
        .collect();
    let minority = percentages.iter().map(|&p| p < MINORITY_PCT && n > 0).collect();
    Distribution { counts, percentages, minority }
}

/// Down-sampling strategy for [`balance`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BalanceStrategy {
    /// Cap every class at the (lower) median class count.
    DownsampleToMedian,
    /// Cap every class at an explicit count.
    DownsampleToCap(usize),
}

/// Down-samples majority classes to the cap, without replacement,
/// deterministically under `seed` (per-class derived sub-seeds). Input order
/// is preserved among kept examples; classes at or below the cap pass through
/// untouched.
pub fn balance(
    examples: Vec<LabeledExample>,
    strategy: BalanceStrategy,
    seed: u64,
) -> Result<Vec<LabeledExample>> {
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, ex) in examples.iter().enumerate() {
        by_class.entry(ex.label).or_default().push(i);
    }
    let cap = match strategy {
        BalanceStrategy::DownsampleToCap(n) => n,
        BalanceStrategy::DownsampleToMedian => {
            let mut sizes: Vec<usize> = by_class.values().map(Vec::len).collect();
            sizes.sort_unstable();
            if sizes.is_empty() {
                return Ok(examples);
            }
            sizes[(sizes.len() - 1) / 2]
        }
    };
    if cap == 0 {
        return Err(Error::InvalidCap);
    }
    let mut keep = vec![true; examples.len()];
    for (&class, indices) in &by_class {
        if indices.len() <= cap {
            continue;
        }
        let mut shuffled = indices.clone();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, class as u64));
        shuffled.shuffle(&mut rng);
        for &drop in &shuffled[cap..] {
            keep[drop] = false;
        }
    }
    Ok(examples
        .into_iter()
        .zip(keep)
        .filter_map(|(ex, k)| k.then_some(ex))
        .collect())
}

/// Stratified split by class. Per-class allocation uses largest-remainder
/// rounding, so every split's class share is within one example of the global
/// ratio. A class with fewer examples than splits goes entirely to train and
/// is reported in the returned warnings.
pub fn split(
    examples: Vec<LabeledExample>,
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<(DatasetSplit, Vec<String>)> {
    let r = [ratios.0, ratios.1, ratios.2];
    if r.iter().any(|&x| x <= 0.0) || (r.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidRatios(r));
    }
    let mut by_class: BTreeMap<usize, Vec<LabeledExample>> = BTreeMap::new();
    for ex in examples {
        by_class.entry(ex.label).or_default().push(ex);
    }
    let mut warnings = Vec::new();
    let mut train = Vec::new();
    let mut dev = Vec::new();
    let mut test = Vec::new();
    for (class, mut members) in by_class {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, class as u64));
        members.shuffle(&mut rng);
        if members.len() < 3 {
            warnings.push(format!(
                "class {class} has {} example(s), fewer than the 3 splits; placed in train",
                members.len()
            ));
            train.extend(members);
            continue;
        }
        let alloc = largest_remainder(members.len(), &r);
        let mut it = members.into_iter();
        train.extend(it.by_ref().take(alloc[0]));
        dev.extend(it.by_ref().take(alloc[1]));
        test.extend(it);
    }
    Ok((DatasetSplit { train, dev, test, seed }, warnings))
}

fn largest_remainder(n: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = ratios.iter().map(|r| r * n as f64).collect();
    let mut alloc = [exact[0] as usize, exact[1] as usize, exact[2] as usize];
    let assigned: usize = alloc.iter().sum();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - alloc[a] as f64;
        let fb = exact[b] - alloc[b] as f64;
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for i in 0..(n - assigned) {
        alloc[order[i % 3]] += 1;
    }
    alloc
}

/// Writes one serialized record per line.
pub fn write_jsonl<T: Serialize>(records: &[T], out: &mut impl Write) -> Result<()> {
    for record in records {
        let line = serde_json::to_string(record).map_err(|e| Error::Malformed {
            what: "jsonl record".into(),
            detail: e.to_string(),
        })?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}
