//! Deterministic synthetic tweet corpora with planted class signals.
//!
//! Each class template plants text words, optional hashtag words, and an
//! optional application source; tweets are filled with shared noise. The
//! generator derives one RNG per tweet from `(seed, index)`, so output is
//! byte-identical across runs and independent of any parallel schedule.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::RawTweet;
use crate::error::{Error, Result};
use crate::util::derive_seed;

fn default_strength() -> f64 {
    1.0
}

/// Signals planted for one class.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassTemplate {
    /// The label emoji; inserted exactly once per tweet.
    pub emoji: String,
    /// One of these words appears in every tweet of the class.
    #[serde(default)]
    pub text_signal: Vec<String>,
    /// One of these becomes a `#hashtag` with probability `hashtag_strength`.
    #[serde(default)]
    pub hashtag_signal: Vec<String>,
    #[serde(default = "default_strength")]
    pub hashtag_strength: f64,
    /// Application source attached with probability `source_strength`.
    #[serde(default)]
    pub source_signal: Option<String>,
    #[serde(default = "default_strength")]
    pub source_strength: f64,
}

/// Full corpus recipe: per-class signals plus shared noise.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticTemplate {
    pub classes: Vec<ClassTemplate>,
    /// Filler vocabulary shared by all classes.
    pub noise_words: Vec<String>,
    /// Probability of appending one noise hashtag (a concatenated pair of
    /// noise words, exercising the segmenter).
    #[serde(default)]
    pub noise_hashtag_rate: f64,
    /// Sources used when a class has no source signal or the signal misses.
    #[serde(default)]
    pub background_sources: Vec<String>,
}

/// Generates `n` tweets, class-balanced within one (tweet `i` belongs to
/// class `i % C`), each containing exactly one label emoji.
pub fn generate_synthetic_corpus(
    template: &SyntheticTemplate,
    n: usize,
    seed: u64,
) -> Result<Vec<RawTweet>> {
    if template.classes.is_empty() {
        return Err(Error::EmptyTemplate);
    }
    if template.classes.iter().any(|c| c.emoji.is_empty()) {
        return Err(Error::Malformed {
            what: "synthetic template".into(),
            detail: "every class needs a label emoji".into(),
        });
    }
    let mut tweets = Vec::with_capacity(n);
    for i in 0..n {
        let class = &template.classes[i % template.classes.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, i as u64));
        tweets.push(render_tweet(template, class, i, &mut rng));
    }
    Ok(tweets)
}

fn render_tweet(
    template: &SyntheticTemplate,
    class: &ClassTemplate,
    index: usize,
    rng: &mut ChaCha8Rng,
) -> RawTweet {
    let mut words: Vec<String> = Vec::new();
    let n_noise = rng.gen_range(3..=7);
    for _ in 0..n_noise {
        if let Some(w) = template.noise_words.choose(rng) {
            words.push(w.clone());
        }
    }
    if let Some(signal) = class.text_signal.choose(rng) {
        let at = rng.gen_range(0..=words.len());
        words.insert(at, signal.clone());
    }
    let at = rng.gen_range(0..=words.len());
    words.insert(at, class.emoji.clone());

    if !class.hashtag_signal.is_empty() && rng.gen::<f64>() < class.hashtag_strength {
        let tag = class.hashtag_signal.choose(rng).expect("nonempty");
        words.push(format!("#{tag}"));
    }
    if template.noise_words.len() >= 2 && rng.gen::<f64>() < template.noise_hashtag_rate {
        let a = template.noise_words.choose(rng).expect("nonempty");
        let b = template.noise_words.choose(rng).expect("nonempty");
        words.push(format!("#{a}{b}"));
    }

    let source = match &class.source_signal {
        Some(signal) if rng.gen::<f64>() < class.source_strength => Some(signal.clone()),
        _ => template.background_sources.choose(rng).cloned(),
    };

    RawTweet {
        id: format!("syn-{index:06}"),
        text: words.join(" "),
        timestamp: Some(format!(
            "2020-01-{:02}T{:02}:{:02}:{:02}Z",
            1 + index / 86_400,
            (index / 3_600) % 24,
            (index / 60) % 60,
            index % 60
        )),
        source,
        is_retweet: false,
    }
}

/// Ready-made templates used by the experiment harness and the CLI presets.
pub mod templates {
    use super::{ClassTemplate, SyntheticTemplate};

    fn words(list: &[&str]) -> Vec<String> {
        list.iter().map(|s| s.to_string()).collect()
    }

    const NOISE: [&str; 16] = [
        "the", "a", "to", "and", "day", "night", "out", "now", "just", "really", "good", "time",
        "city", "lights", "weekend", "vibes",
    ];

    /// Eight classes whose label is the joint outcome of three independent
    /// binary signals: a text word, a hashtag, and an application source.
    /// Text alone identifies the label 1-in-4, text+source 1-in-2, and all
    /// three features together determine it fully.
    pub fn ablation() -> SyntheticTemplate {
        let emojis = ["❤️", "😂", "🔥", "😍", "😭", "🙏", "💀", "✨"];
        let text_bit = ["sunset", "coffee"];
        let hashtag_bit = ["citylights", "weekendvibes"];
        let source_bit = ["Instagram", "Twitter for iPhone"];
        let classes = (0..8)
            .map(|c| ClassTemplate {
                emoji: emojis[c].to_string(),
                text_signal: vec![text_bit[c & 1].to_string()],
                hashtag_signal: vec![hashtag_bit[(c >> 1) & 1].to_string()],
                hashtag_strength: 1.0,
                source_signal: Some(source_bit[(c >> 2) & 1].to_string()),
                source_strength: 1.0,
            })
            .collect();
        SyntheticTemplate {
            classes,
            noise_words: words(&NOISE),
            noise_hashtag_rate: 0.3,
            background_sources: vec![],
        }
    }

    /// Four classes, each fully determined by a unique always-present text
    /// word. Linearly separable in bag-of-words space.
    pub fn capacity() -> SyntheticTemplate {
        let spec = [
            ("❤️", "pizza"),
            ("😂", "guitar"),
            ("🔥", "rocket"),
            ("😍", "island"),
        ];
        SyntheticTemplate {
            classes: spec
                .iter()
                .map(|(emoji, word)| ClassTemplate {
                    emoji: emoji.to_string(),
                    text_signal: vec![word.to_string()],
                    hashtag_signal: vec![],
                    hashtag_strength: 0.0,
                    source_signal: None,
                    source_strength: 0.0,
                })
                .collect(),
            noise_words: words(&NOISE),
            noise_hashtag_rate: 0.0,
            background_sources: vec!["Twitter Web App".to_string()],
        }
    }

    /// Four classes with three planted words each; every tweet of a class
    /// carries one of them. Used to check per-class feature recovery.
    pub fn feature_recovery() -> SyntheticTemplate {
        let spec: [(&str, [&str; 3]); 4] = [
            ("❤️", ["love", "family", "happy"]),
            ("😂", ["lol", "lmao", "funny"]),
            ("🔥", ["lit", "heat", "album"]),
            ("😍", ["beautiful", "cute", "gorgeous"]),
        ];
        SyntheticTemplate {
            classes: spec
                .iter()
                .map(|(emoji, planted)| ClassTemplate {
                    emoji: emoji.to_string(),
                    text_signal: words(&planted[..]),
                    hashtag_signal: vec![],
                    hashtag_strength: 0.0,
                    source_signal: None,
                    source_strength: 0.0,
                })
                .collect(),
            noise_words: words(&NOISE),
            noise_hashtag_rate: 0.0,
            background_sources: vec!["Twitter Web App".to_string()],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::emoji::scan_emojis;

    #[test]
    fn class_balanced_within_one() {
        let template = templates::capacity();
        let tweets = generate_synthetic_corpus(&template, 10, 0).unwrap();
        assert_eq!(tweets.len(), 10);
        let with_first = tweets.iter().filter(|t| t.text.contains("❤️")).count();
        let with_second = tweets.iter().filter(|t| t.text.contains("😂")).count();
        assert_eq!(with_first, 3);
        assert_eq!(with_second, 3);
    }

    #[test]
    fn source_signal_at_full_strength_always_applies() {
        let template = templates::ablation();
        let tweets = generate_synthetic_corpus(&template, 64, 1).unwrap();
        for (i, tweet) in tweets.iter().enumerate() {
            let class = i % 8;
            let expected = if (class >> 2) & 1 == 0 { "Instagram" } else { "Twitter for iPhone" };
            assert_eq!(tweet.source.as_deref(), Some(expected), "tweet {i}");
        }
    }

    #[test]
    fn exactly_one_label_emoji_per_tweet() {
        let template = templates::ablation();
        for tweet in generate_synthetic_corpus(&template, 80, 2).unwrap() {
            assert_eq!(scan_emojis(&tweet.text).len(), 1, "text: {}", tweet.text);
        }
    }

    #[test]
    fn same_seed_is_byte_identical() {
        let template = templates::ablation();
        let a = generate_synthetic_corpus(&template, 40, 9).unwrap();
        let b = generate_synthetic_corpus(&template, 40, 9).unwrap();
        assert_eq!(a, b);
        let c = generate_synthetic_corpus(&template, 40, 10).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn empty_template_is_an_error() {
        let template = SyntheticTemplate {
            classes: vec![],
            noise_words: vec![],
            noise_hashtag_rate: 0.0,
            background_sources: vec![],
        };
        assert!(matches!(
            generate_synthetic_corpus(&template, 5, 0),
            Err(Error::EmptyTemplate)
        ));
    }

    #[test]
    fn ids_are_unique_and_ordered() {
        let template = templates::capacity();
        let tweets = generate_synthetic_corpus(&template, 5, 3).unwrap();
        let ids: Vec<&str> = tweets.iter().map(|t| t.id.as_str()).collect();
        assert_eq!(ids, vec!["syn-000000", "syn-000001", "syn-000002", "syn-000003", "syn-000004"]);
    }
}
