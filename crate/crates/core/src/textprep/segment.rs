//! Maximum-likelihood hashtag segmentation over a unigram lexicon.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Default cap on candidate word length; raised to the longest lexicon word
/// when that is longer.
pub const DEFAULT_MAX_WORD_LEN: usize = 20;

/// Unigram counts used to score segmentations.
///
/// In-lexicon words score `log10(count/total)`; out-of-vocabulary words are
/// penalized by length, `log10(1/(total * 10^len))`, which keeps every string
/// segmentable. Base 10 makes the OOV penalty an exact integer when the
/// lexicon is empty, so tie-breaking stays stable.
#[derive(Debug, Clone)]
pub struct SegmentLexicon {
    counts: HashMap<String, u64>,
    total: u64,
    max_word_len: usize,
}

impl SegmentLexicon {
    pub fn new(counts: impl IntoIterator<Item = (String, u64)>) -> Self {
        let mut map = HashMap::new();
        for (word, count) in counts {
            if count == 0 {
                continue;
            }
            let word = word.to_lowercase();
            if !word.is_empty() && word.chars().all(|c| c.is_alphanumeric()) {
                *map.entry(word).or_insert(0) += count;
            }
        }
        let total = map.values().sum();
        let longest = map.keys().map(|w| w.chars().count()).max().unwrap_or(0);
        Self {
            counts: map,
            total,
            max_word_len: DEFAULT_MAX_WORD_LEN.max(longest),
        }
    }

    pub fn empty() -> Self {
        Self::new(std::iter::empty())
    }

    /// Builds a lexicon from a token stream, keeping alphanumeric tokens.
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a str>) -> Self {
        let mut counts: HashMap<String, u64> = HashMap::new();
        for tok in tokens {
            if !tok.is_empty() && tok.chars().all(|c| c.is_alphanumeric()) {
                *counts.entry(tok.to_lowercase()).or_insert(0) += 1;
            }
        }
        Self::new(counts)
    }

    /// Reads `word<TAB>count` lines.
    pub fn from_tsv(path: &Path) -> Result<Self> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut counts = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (word, count) = line.split_once('\t').ok_or_else(|| Error::Malformed {
                what: "lexicon line".into(),
                detail: format!("line {}: expected word<TAB>count", lineno + 1),
            })?;
            let count: u64 = count.trim().parse().map_err(|_| Error::Malformed {
                what: "lexicon count".into(),
                detail: format!("line {}: {:?}", lineno + 1, count),
            })?;
            counts.push((word.to_string(), count));
        }
        Ok(Self::new(counts))
    }

    /// Writes `word<TAB>count` lines, sorted by word for reproducible files.
    pub fn write_tsv(&self, out: &mut impl Write) -> Result<()> {
        let mut entries: Vec<_> = self.counts.iter().collect();
        entries.sort();
        for (word, count) in entries {
            writeln!(out, "{word}\t{count}")?;
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn max_word_len(&self) -> usize {
        self.max_word_len
    }

    pub fn log_prob(&self, word: &str) -> f64 {
        let total = self.total.max(1) as f64;
        match self.counts.get(word) {
            Some(&c) => (c as f64 / total).log10(),
            None => -(total.log10() + word.chars().count() as f64),
        }
    }
}

/// Splits `tag` into the word sequence maximizing the summed log probability.
///
/// Prefix DP over candidate words up to the lexicon's max word length. Ties
/// are broken by fewer words, then lexicographically smaller sequence; the
/// score of a segmentation is the left-to-right fold of its word scores, so
/// equal segmentations compare bit-identically.
pub fn segment_hashtag(tag: &str, lexicon: &SegmentLexicon) -> Result<Vec<String>> {
    if tag.is_empty() {
        return Err(Error::EmptyTag);
    }
    let chars: Vec<char> = tag.chars().collect();
    let n = chars.len();
    let window = lexicon.max_word_len().max(1);

    // best[i]: (score, word count, start of last word) for the prefix of length i.
    let mut best: Vec<Option<(f64, usize, usize)>> = vec![None; n + 1];
    best[0] = Some((0.0, 0, 0));
    for i in 1..=n {
        for j in i.saturating_sub(window)..i {
            let Some((prev_score, prev_words, _)) = best[j] else {
                continue;
            };
            let word: String = chars[j..i].iter().collect();
            let cand = (prev_score + lexicon.log_prob(&word), prev_words + 1, j);
            match best[i] {
                None => best[i] = Some(cand),
                Some(cur) => {
                    if candidate_beats(cand, cur, &best, &chars, i) {
                        best[i] = Some(cand);
                    }
                }
            }
        }
    }
    Ok(reconstruct(&best, &chars, n))
}

fn candidate_beats(
    cand: (f64, usize, usize),
    cur: (f64, usize, usize),
    best: &[Option<(f64, usize, usize)>],
    chars: &[char],
    i: usize,
) -> bool {
    if cand.0 != cur.0 {
        return cand.0 > cur.0;
    }
    if cand.1 != cur.1 {
        return cand.1 < cur.1;
    }
    // Equal score and word count: materialize both sequences and compare.
    let mut with_cand = reconstruct_via(best, chars, cand.2);
    with_cand.push(chars[cand.2..i].iter().collect());
    let mut with_cur = reconstruct_via(best, chars, cur.2);
    with_cur.push(chars[cur.2..i].iter().collect());
    with_cand < with_cur
}

fn reconstruct_via(best: &[Option<(f64, usize, usize)>], chars: &[char], upto: usize) -> Vec<String> {
    reconstruct(best, chars, upto)
}

fn reconstruct(best: &[Option<(f64, usize, usize)>], chars: &[char], mut i: usize) -> Vec<String> {
    let mut words = Vec::new();
    while i > 0 {
        let (_, _, j) = best[i].expect("every prefix is reachable via single chars");
        words.push(chars[j..i].iter().collect::<String>());
        i = j;
    }
    words.reverse();
    words
}

/// Score of a given segmentation, folded left to right. Shared by the DP and
/// by exhaustive-search checks so identical segmentations score identically.
pub fn segmentation_score(words: &[String], lexicon: &SegmentLexicon) -> f64 {
    words.iter().fold(0.0, |acc, w| acc + lexicon.log_prob(w))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> SegmentLexicon {
        SegmentLexicon::new([
            ("now".to_string(), 10u64),
            ("playing".to_string(), 5),
            ("play".to_string(), 6),
            ("ing".to_string(), 1),
        ])
    }

    #[test]
    fn picks_max_likelihood_split() {
        let lex = toy();
        let words = segment_hashtag("nowplaying", &lex).unwrap();
        assert_eq!(words, vec!["now", "playing"]);
        // Scores in natural-log units for comparison against hand math.
        let ln10 = 10f64.ln();
        let winner = segmentation_score(&words, &lex) * ln10;
        let loser =
            segmentation_score(&["now".into(), "play".into(), "ing".into()], &lex) * ln10;
        assert!((winner - (-2.270)).abs() < 2e-3, "winner score {winner}");
        assert!((loser - (-5.178)).abs() < 2e-3, "loser score {loser}");
        assert!(winner > loser);
    }

    #[test]
    fn single_lexicon_word_stays_whole() {
        let lex = SegmentLexicon::new([("love".to_string(), 3u64)]);
        assert_eq!(segment_hashtag("love", &lex).unwrap(), vec!["love"]);
    }

    #[test]
    fn oov_prefers_one_word_over_two() {
        let lex = SegmentLexicon::empty();
        assert_eq!(segment_hashtag("zzqq", &lex).unwrap(), vec!["zzqq"]);
    }

    #[test]
    fn empty_tag_is_an_error() {
        assert!(matches!(segment_hashtag("", &toy()), Err(Error::EmptyTag)));
    }

    #[test]
    fn concatenation_reproduces_input() {
        let lex = toy();
        for tag in ["nowplaying", "playingnow", "xplayz", "a"] {
            let words = segment_hashtag(tag, &lex).unwrap();
            assert_eq!(words.concat(), tag);
        }
    }

    #[test]
    fn lexicon_total_and_filtering() {
        let lex = SegmentLexicon::new([
            ("Now".to_string(), 2u64),
            ("<happy>".to_string(), 9),
            ("".to_string(), 9),
            ("zero".to_string(), 0),
        ]);
        assert_eq!(lex.total(), 2);
        assert_eq!(lex.len(), 1);
        assert!(lex.log_prob("now") > lex.log_prob("nope"));
    }

    #[test]
    fn tsv_round_trip(){
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("lex.tsv");
        let lex = toy();
        let mut buf = Vec::new();
        lex.write_tsv(&mut buf).unwrap();
        std::fs::write(&path, &buf).unwrap();
        let back = SegmentLexicon::from_tsv(&path).unwrap();
        assert_eq!(back.total(), lex.total());
        assert_eq!(back.len(), lex.len());
        assert_eq!(back.log_prob("playing"), lex.log_prob("playing"));
    }
}
