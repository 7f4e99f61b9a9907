//! Tweet text normalization, tokenization, and hashtag extraction.
//!
//! The normalization rule order is fixed: emoji strip, URL removal, mention
//! removal, emoticon mapping, date pattern, censored-word pattern, number
//! pattern, lowercasing, punctuation strip, whitespace collapse. Applying
//! the full set to its own output is a no-op.

pub mod segment;
pub mod source;

pub use segment::SegmentLexicon;
pub use source::SourceTable;

use regex::Regex;

pub use crate::emoji::strip_and_collect_emojis;

/// Tokens produced by replacement rules. Kept intact by the punctuation strip.
pub const PLACEHOLDERS: [&str; 5] = ["<happy>", "<sad>", "<date>", "<censored>", "<number>"];

const HAPPY_EMOTICONS: [&str; 4] = [":)", ":-)", ":D", ":-D"];
const SAD_EMOTICONS: [&str; 3] = [":(", ":-(", ":'("];

/// Compiled normalization rule set. Construct once and reuse; the tables are
/// read-only and safe to share across threads.
pub struct NormalizationRules {
    url: Regex,
    mention: Regex,
    date: Regex,
    censored: Regex,
    number: Regex,
    hashtag: Regex,
}

impl NormalizationRules {
    pub fn new() -> Self {
        Self {
            url: Regex::new(r"(?:https?://|www\.)\S+").unwrap(),
            mention: Regex::new(r"@\w+").unwrap(),
            date: Regex::new(r"\b(?:\d{1,2}[./-]\d{1,2}[./-]\d{2,4}|\d{4}[./-]\d{1,2}[./-]\d{1,2})\b")
                .unwrap(),
            censored: Regex::new(r"\b[a-zA-Z]+\*[a-zA-Z*]*[a-zA-Z]\b").unwrap(),
            number: Regex::new(r"\b\d+(?:\.\d+)?\b").unwrap(),
            hashtag: Regex::new(r"#([\p{L}\p{N}_]+)").unwrap(),
        }
    }

    /// Applies the full rule chain. Emojis are stripped again here so the
    /// function is total; callers that already ran
    /// [`strip_and_collect_emojis`] lose nothing.
    pub fn normalize(&self, text: &str) -> String {
        let (text, _) = strip_and_collect_emojis(text);
        let text = self.url.replace_all(&text, " ");
        let text = self.mention.replace_all(&text, " ");
        let text = map_emoticons(&text);
        let text = self.date.replace_all(&text, " <date> ");
        let text = self.censored.replace_all(&text, " <censored> ");
        let text = self.number.replace_all(&text, " <number> ");
        let text = text.to_lowercase();
        strip_punctuation(&text)
    }

    /// All hashtags in raw (pre-normalization) text, lowercased, '#' removed,
    /// in order of appearance.
    pub fn extract_hashtags(&self, raw_text: &str) -> Vec<String> {
        self.hashtag
            .captures_iter(raw_text)
            .map(|c| c[1].to_lowercase())
            .collect()
    }

    /// Removes every `#tag` span from raw text, leaving the rest untouched.
    /// Hashtags are modeled as a separate feature, so their words must not
    /// leak into the text tokens.
    pub fn remove_hashtags(&self, raw_text: &str) -> String {
        self.hashtag.replace_all(raw_text, " ").into_owned()
    }
}

impl Default for NormalizationRules {
    fn default() -> Self {
        Self::new()
    }
}

fn map_emoticons(text: &str) -> String {
    let mapped: Vec<&str> = text
        .split_whitespace()
        .map(|tok| {
            if HAPPY_EMOTICONS.contains(&tok) {
                "<happy>"
            } else if SAD_EMOTICONS.contains(&tok) {
                "<sad>"
            } else {
                tok
            }
        })
        .collect();
    mapped.join(" ")
}

/// Keeps placeholder tokens verbatim; otherwise retains only `[a-z0-9_]`.
/// Digit runs exposed by the strip (e.g. a non-ASCII mark glued to a number,
/// which hides the word boundary from the number rule) still become
/// `<number>`, keeping the rule set idempotent.
fn strip_punctuation(text: &str) -> String {
    let kept: Vec<String> = text
        .split_whitespace()
        .filter_map(|tok| {
            if PLACEHOLDERS.contains(&tok) {
                return Some(tok.to_string());
            }
            let cleaned: String = tok
                .chars()
                .filter(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || *c == '_')
                .collect();
            if cleaned.is_empty() {
                None
            } else if cleaned.chars().all(|c| c.is_ascii_digit()) {
                Some("<number>".to_string())
            } else {
                Some(cleaned)
            }
        })
        .collect();
    kept.join(" ")
}

/// Whitespace tokenization of normalized text. Never yields empty tokens.
pub fn tokenize(normalized: &str) -> Vec<String> {
    normalized.split_whitespace().map(str::to_string).collect()
}
