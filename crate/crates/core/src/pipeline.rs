//! The preprocessing path from raw tweets to labeled examples, shared by
//! corpus ingestion and single-tweet prediction so both see identical
//! tokenization.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{
    derive_label_set, filter_records, FilterStats, LabelPolicy, LabelSet, LabeledExample, RawTweet,
};
use crate::error::{Error, Result};
use crate::textprep::segment::segment_hashtag;
use crate::textprep::{tokenize, NormalizationRules, SegmentLexicon, SourceTable};

/// Tokenizes the text with hashtags removed, and collects the raw hashtags.
/// Hashtags are a separate feature, so their words must not leak into the
/// text tokens.
pub fn prep_text(rules: &NormalizationRules, raw_text: &str) -> (Vec<String>, Vec<String>) {
    let tags = rules.extract_hashtags(raw_text);
    let without_tags = rules.remove_hashtags(raw_text);
    let tokens = tokenize(&rules.normalize(&without_tags));
    (tokens, tags)
}

/// Segments each hashtag into words. Underscore-separated parts are
/// segmented independently.
pub fn segment_tags(lexicon: &SegmentLexicon, tags: &[String]) -> Vec<String> {
    let mut words = Vec::new();
    for tag in tags {
        for part in tag.split('_').filter(|p| !p.is_empty()) {
            words.extend(segment_hashtag(part, lexicon).expect("part is nonempty"));
        }
    }
    words
}

/// The fitted preprocessing state needed to encode new text exactly like the
/// ingested corpus.
pub struct Preprocessor {
    pub rules: NormalizationRules,
    pub lexicon: SegmentLexicon,
    pub sources: SourceTable,
}

/// Preprocessed fields of one tweet.
#[derive(Debug, Clone, PartialEq)]
pub struct PreppedText {
    pub text_tokens: Vec<String>,
    pub hashtag_tokens: Vec<String>,
    pub source_id: usize,
}

impl Preprocessor {
    pub fn new(lexicon: SegmentLexicon, sources: SourceTable) -> Self {
        Self { rules: NormalizationRules::new(), lexicon, sources }
    }

    pub fn preprocess(&self, raw_text: &str, source: Option<&str>) -> PreppedText {
        let (text_tokens, tags) = prep_text(&self.rules, raw_text);
        PreppedText {
            text_tokens,
            hashtag_tokens: segment_tags(&self.lexicon, &tags),
            source_id: self.sources.source_id(source),
        }
    }
}

#[derive(Debug, Clone)]
pub struct IngestOptions {
    pub class_count: usize,
    pub policy: LabelPolicy,
    pub source_top_k: usize,
    /// External lexicon; when absent one is built from the corpus text tokens.
    pub lexicon: Option<SegmentLexicon>,
    /// Extra source aliases merged over the builtin table.
    pub extra_aliases: Vec<(String, String)>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct IngestSummary {
    pub input_records: usize,
    pub skipped_lines: usize,
    pub dropped: FilterStats,
    pub no_label: usize,
    pub empty_text_after_prep: usize,
    pub kept: usize,
}

pub struct IngestOutput {
    pub examples: Vec<LabeledExample>,
    pub label_set: LabelSet,
    pub lexicon: SegmentLexicon,
    pub sources: SourceTable,
    pub summary: IngestSummary,
}

/// Full ingestion: filter, derive the label set, label, normalize/tokenize,
/// extract and segment hashtags, canonicalize sources.
///
/// An empty (or fully filtered) corpus yields an empty dataset rather than a
/// label-set error.
pub fn ingest(tweets: Vec<RawTweet>, options: &IngestOptions) -> Result<IngestOutput> {
    let rules = NormalizationRules::new();
    let input_records = tweets.len();
    let (kept, dropped) = filter_records(tweets);

    if kept.is_empty() {
        return Ok(IngestOutput {
            examples: Vec::new(),
            label_set: LabelSet::from_emojis(vec![]),
            lexicon: options.lexicon.clone().unwrap_or_else(SegmentLexicon::empty),
            sources: SourceTable::fit_with_aliases(
                std::iter::empty(),
                options.source_top_k,
                &options.extra_aliases,
            )?,
            summary: IngestSummary { input_records, dropped, ..IngestSummary::default() },
        });
    }

    let label_set = derive_label_set(&kept, options.class_count)?;
    let mut no_label = 0usize;
    let labeled: Vec<(RawTweet, usize)> = kept
        .into_iter()
        .filter_map(|tweet| {
            match crate::corpus::extract_label(&tweet, &label_set, options.policy) {
                Some(label) => Some((tweet, label)),
                None => {
                    no_label += 1;
                    None
                }
            }
        })
        .collect();

    let sources = SourceTable::fit_with_aliases(
        labeled.iter().map(|(t, _)| t.source.as_deref()),
        options.source_top_k,
        &options.extra_aliases,
    )?;

    let mut empty_text_after_prep = 0usize;
    let mut interim = Vec::with_capacity(labeled.len());
    for (tweet, label) in labeled {
        let (text_tokens, tags) = prep_text(&rules, &tweet.text);
        if text_tokens.is_empty() {
            empty_text_after_prep += 1;
            continue;
        }
        interim.push((tweet, label, text_tokens, tags));
    }

    let lexicon = options.lexicon.clone().unwrap_or_else(|| {
        SegmentLexicon::from_tokens(
            interim.iter().flat_map(|(_, _, tokens, _)| tokens.iter().map(String::as_str)),
        )
    });

    let examples: Vec<LabeledExample> = interim
        .into_iter()
        .map(|(tweet, label, text_tokens, tags)| LabeledExample {
            tweet_id: tweet.id,
            label,
            text_tokens,
            hashtag_tokens: segment_tags(&lexicon, &tags),
            source_id: sources.source_id(tweet.source.as_deref()),
            timestamp: tweet.timestamp,
        })
        .collect();

    let summary = IngestSummary {
        input_records,
        skipped_lines: 0,
        dropped,
        no_label,
        empty_text_after_prep,
        kept: examples.len(),
    };
    Ok(IngestOutput { examples, label_set, lexicon, sources, summary })
}

/// One line of the labeled-dataset JSONL interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledRecord {
    pub tweet_id: String,
    pub label: usize,
    pub label_emoji: String,
    pub text_tokens: Vec<String>,
    pub hashtag_tokens: Vec<String>,
    pub source: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

pub fn write_labeled_jsonl(
    examples: &[LabeledExample],
    label_set: &LabelSet,
    sources: &SourceTable,
    out: &mut impl Write,
) -> Result<()> {
    for ex in examples {
        let record = LabeledRecord {
            tweet_id: ex.tweet_id.clone(),
            label: ex.label,
            label_emoji: label_set.emoji(ex.label).to_string(),
            text_tokens: ex.text_tokens.clone(),
            hashtag_tokens: ex.hashtag_tokens.clone(),
            source: sources.name(ex.source_id).to_string(),
            timestamp: ex.timestamp.clone(),
        };
        let line = serde_json::to_string(&record).map_err(|e| Error::Malformed {
            what: "labeled record".into(),
            detail: e.to_string(),
        })?;
        writeln!(out, "{line}")?;
    }
    Ok(())
}

pub fn read_labeled_jsonl(
    path: &Path,
    label_set: &LabelSet,
    sources: &SourceTable,
) -> Result<Vec<LabeledExample>> {
    let content = std::fs::read_to_string(path)?;
    let mut examples = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record: LabeledRecord = serde_json::from_str(line).map_err(|e| Error::Malformed {
            what: "labeled record".into(),
            detail: format!("line {}: {e}", lineno + 1),
        })?;
        if record.label >= label_set.len()
            || label_set.emoji(record.label) != record.label_emoji
        {
            return Err(Error::Malformed {
                what: "labeled record".into(),
                detail: format!(
                    "line {}: label {} / emoji {:?} disagree with the label set",
                    lineno + 1,
                    record.label,
                    record.label_emoji
                ),
            });
        }
        let source_id = sources
            .id_of_name(&record.source)
            .unwrap_or_else(|| sources.other_id());
        examples.push(LabeledExample {
            tweet_id: record.tweet_id,
            label: record.label,
            text_tokens: record.text_tokens,
            hashtag_tokens: record.hashtag_tokens,
            source_id,
            timestamp: record.timestamp,
        });
    }
    Ok(examples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synthetic::{generate_synthetic_corpus, templates};

    fn options() -> IngestOptions {
        IngestOptions {
            class_count: 2,
            policy: LabelPolicy::First,
            source_top_k: 10,
            lexicon: None,
            extra_aliases: vec![],
        }
    }

    fn tweet(id: &str, text: &str, source: Option<&str>) -> RawTweet {
        RawTweet {
            id: id.into(),
            text: text.into(),
            timestamp: None,
            source: source.map(str::to_string),
            is_retweet: false,
        }
    }

    #[test]
    fn ingest_drops_and_counts() {
        let mut retweet = tweet("1", "boring ❤️", None);
        retweet.is_retweet = true;
        let tweets = vec![
            retweet,
            tweet("2", "no emoji at all", None),
            tweet("3", "love this ❤️ #NowPlaying", Some("Instagram")),
            tweet("4", "so funny 😂", Some("Twitter for iPhone")),
            tweet("5", "more love ❤️", None),
        ];
        let out = ingest(tweets, &options()).unwrap();
        assert_eq!(out.summary.input_records, 5);
        assert_eq!(out.summary.dropped.retweets, 1);
        assert_eq!(out.summary.no_label, 1);
        assert_eq!(out.summary.kept, 3);
        assert_eq!(out.label_set.emojis(), &["❤️", "😂"]);

        let first = &out.examples[0];
        assert_eq!(first.tweet_id, "3");
        assert_eq!(first.label, 0);
        assert_eq!(first.text_tokens, vec!["love", "this"]);
        assert!(!first.text_tokens.iter().any(|t| t.contains("nowplaying")));
        assert!(!first.hashtag_tokens.is_empty());
        assert_eq!(first.source_id, out.sources.id_of_name("instagram").unwrap());
    }

    #[test]
    fn ingest_empty_corpus_is_ok() {
        let out = ingest(vec![], &options()).unwrap();
        assert!(out.examples.is_empty());
        assert_eq!(out.summary.kept, 0);
        assert!(out.label_set.is_empty());
    }

    #[test]
    fn emoji_only_tweet_is_dropped_after_prep() {
        let tweets = vec![
            tweet("1", "❤️", None),
            tweet("2", "words here ❤️", None),
            tweet("3", "more 😂 words", None),
        ];
        let out = ingest(tweets, &options()).unwrap();
        assert_eq!(out.summary.empty_text_after_prep, 1);
        assert_eq!(out.summary.kept, 2);
    }

    #[test]
    fn predict_path_matches_ingest_path() {
        let template = templates::ablation();
        let tweets = generate_synthetic_corpus(&template, 64, 3).unwrap();
        let out = ingest(
            tweets.clone(),
            &IngestOptions { class_count: 8, ..options() },
        )
        .unwrap();
        let pre = Preprocessor::new(out.lexicon.clone(), out.sources.clone());
        for ex in &out.examples {
            let raw = tweets.iter().find(|t| t.id == ex.tweet_id).unwrap();
            let prepped = pre.preprocess(&raw.text, raw.source.as_deref());
            // The prediction path sees the emoji, which ingest strips; both
            // normalize it away, so the fields must agree exactly.
            assert_eq!(prepped.text_tokens, ex.text_tokens, "tweet {}", ex.tweet_id);
            assert_eq!(prepped.hashtag_tokens, ex.hashtag_tokens);
            assert_eq!(prepped.source_id, ex.source_id);
        }
    }

    #[test]
    fn labeled_jsonl_round_trip() {
        let template = templates::ablation();
        let tweets = generate_synthetic_corpus(&template, 32, 5).unwrap();
        let out = ingest(tweets, &IngestOptions { class_count: 8, ..options() }).unwrap();
        let mut buf = Vec::new();
        write_labeled_jsonl(&out.examples, &out.label_set, &out.sources, &mut buf).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("labeled.jsonl");
        std::fs::write(&path, &buf).unwrap();
        let back = read_labeled_jsonl(&path, &out.label_set, &out.sources).unwrap();
        assert_eq!(back, out.examples);
    }
}
