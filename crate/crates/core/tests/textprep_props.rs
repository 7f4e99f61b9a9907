//! Property tests for normalization, tokenization, and hashtag segmentation.

use proptest::prelude::*;

use emopred::emoji::{scan_emojis, strip_and_collect_emojis};
use emopred::textprep::segment::{segment_hashtag, segmentation_score, SegmentLexicon};
use emopred::textprep::{tokenize, NormalizationRules};

fn arb_tweetish() -> impl Strategy<Value = String> {
    // A mix of words, punctuation, urls, mentions, emojis, numbers.
    prop::string::string_regex(
        "([a-zA-Z]{1,8}|❤️|😂|👨‍👩‍👧|:\\)|:\\(|[0-9]{1,4}|@[a-z]{1,5}|http://t\\.co/[a-z]{1,4}|f\\*\\*k|12/25/2019|[!.,#<>*_-]| ){0,14}",
    )
    .unwrap()
}

proptest! {
    #[test]
    fn normalize_is_idempotent(text in arb_tweetish()) {
        let rules = NormalizationRules::new();
        let once = rules.normalize(&text);
        prop_assert_eq!(rules.normalize(&once), once.clone(), "input: {:?}", text);
    }

    #[test]
    fn normalize_is_idempotent_on_arbitrary_unicode(text in "\\PC{0,40}") {
        let rules = NormalizationRules::new();
        let once = rules.normalize(&text);
        prop_assert_eq!(rules.normalize(&once), once.clone(), "input: {:?}", text);
    }

    #[test]
    fn stripped_text_has_no_emojis(text in arb_tweetish()) {
        let (stripped, _) = strip_and_collect_emojis(&text);
        prop_assert!(scan_emojis(&stripped).is_empty(), "residual emojis in {:?}", stripped);
    }

    #[test]
    fn strip_preserves_emoji_free_text_modulo_spaces(words in prop::collection::vec("[a-z]{1,6}", 0..8)) {
        let text = words.join(" ");
        let (stripped, emojis) = strip_and_collect_emojis(&text);
        prop_assert!(emojis.is_empty());
        prop_assert_eq!(stripped, text);
    }

    #[test]
    fn tokenize_never_yields_empty_tokens(text in "\\PC{0,60}") {
        prop_assert!(tokenize(&text).iter().all(|t| !t.is_empty()));
    }

    #[test]
    fn join_then_tokenize_is_identity(tokens in prop::collection::vec("[a-z0-9_<>]{1,8}", 0..10)) {
        let joined = tokens.join(" ");
        prop_assert_eq!(tokenize(&joined), tokens);
    }

    #[test]
    fn segmentation_concat_reproduces_tag(tag in "[a-z]{1,18}") {
        let lexicon = SegmentLexicon::new([
            ("now".to_string(), 8u64),
            ("play".to_string(), 5),
            ("ing".to_string(), 2),
            ("we".to_string(), 7),
            ("love".to_string(), 9),
        ]);
        let words = segment_hashtag(&tag, &lexicon).unwrap();
        prop_assert_eq!(words.concat(), tag);
        prop_assert!(words.iter().all(|w| !w.is_empty()));
    }

    #[test]
    fn segmentation_matches_exhaustive_search(
        tag in "[a-c]{1,10}",
        counts in prop::collection::vec(1..40u64, 6),
    ) {
        let entries = ["a", "b", "ab", "bc", "abc", "ca"];
        let lexicon = SegmentLexicon::new(
            entries.iter().zip(&counts).map(|(w, &c)| (w.to_string(), c)),
        );
        let got = segment_hashtag(&tag, &lexicon).unwrap();
        let want = exhaustive_best(&tag, &lexicon);
        prop_assert_eq!(got, want, "tag {:?}", tag);
    }
}

/// Independent oracle: enumerate every segmentation (2^(n-1) splits) honoring
/// the lexicon's word-length window, scoring by the same left-to-right fold,
/// and pick the best by (score, fewer words, lexicographic order).
fn exhaustive_best(tag: &str, lexicon: &SegmentLexicon) -> Vec<String> {
    let chars: Vec<char> = tag.chars().collect();
    let window = lexicon.max_word_len();
    let mut best: Option<(f64, Vec<String>)> = None;
    let n = chars.len();
    for mask in 0..(1u32 << (n - 1)) {
        let mut words = Vec::new();
        let mut start = 0;
        let mut valid = true;
        for i in 0..n {
            let boundary = i == n - 1 || (mask >> i) & 1 == 1;
            if boundary {
                if i + 1 - start > window {
                    valid = false;
                    break;
                }
                words.push(chars[start..=i].iter().collect::<String>());
                start = i + 1;
            }
        }
        if !valid {
            continue;
        }
        let score = segmentation_score(&words, lexicon);
        let better = match &best {
            None => true,
            Some((best_score, best_words)) => {
                score > *best_score
                    || (score == *best_score && words.len() < best_words.len())
                    || (score == *best_score
                        && words.len() == best_words.len()
                        && words < *best_words)
            }
        };
        if better {
            best = Some((score, words));
        }
    }
    best.expect("single chars always segment").1
}
