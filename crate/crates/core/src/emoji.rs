//! Emoji detection over grapheme-cluster-like units.
//!
//! An emoji here is a maximal run starting at a codepoint in the emoji
//! pictograph ranges, extended by variation selectors, skin-tone modifiers,
//! keycap marks, tag characters, and ZWJ joins. A ZWJ sequence such as a
//! family emoji counts as a single emoji; a regional-indicator pair counts
//! as a single flag.

const ZWJ: char = '\u{200D}';
const VS15: char = '\u{FE0E}';
const VS16: char = '\u{FE0F}';
const KEYCAP: char = '\u{20E3}';

fn is_regional_indicator(c: char) -> bool {
    ('\u{1F1E6}'..='\u{1F1FF}').contains(&c)
}

fn is_skin_tone(c: char) -> bool {
    ('\u{1F3FB}'..='\u{1F3FF}').contains(&c)
}

fn is_tag_char(c: char) -> bool {
    ('\u{E0020}'..='\u{E007F}').contains(&c)
}

/// Base codepoints that start an emoji cluster.
pub fn is_emoji_base(c: char) -> bool {
    let u = c as u32;
    matches!(u,
        0x231A..=0x231B          // watch, hourglass
        | 0x23E9..=0x23F3        // media controls, clocks
        | 0x23F8..=0x23FA
        | 0x25AA..=0x25AB        // small squares
        | 0x25B6 | 0x25C0
        | 0x25FB..=0x25FE
        | 0x2600..=0x27BF        // misc symbols, dingbats (hearts, sparkles, hands)
        | 0x2934..=0x2935
        | 0x2B05..=0x2B07
        | 0x2B1B..=0x2B1C
        | 0x2B50 | 0x2B55
        | 0x3030 | 0x303D
        | 0x3297 | 0x3299
        | 0x1F004 | 0x1F0CF      // mahjong tile, joker
        | 0x1F170..=0x1F19A      // enclosed alphanumerics
        | 0x1F1E6..=0x1F1FF      // regional indicators
        | 0x1F201..=0x1F2FF      // enclosed ideographs
        | 0x1F300..=0x1F5FF      // misc pictographs
        | 0x1F600..=0x1F64F      // emoticons
        | 0x1F680..=0x1F6FF      // transport
        | 0x1F7E0..=0x1F7EB      // colored shapes
        | 0x1F7F0
        | 0x1F900..=0x1F9FF      // supplemental pictographs
        | 0x1FA70..=0x1FAFF      // extended pictographs
    )
}

fn is_keycap_base(chars: &[char], i: usize) -> bool {
    let c = chars[i];
    if !matches!(c, '#' | '*' | '0'..='9') {
        return false;
    }
    match chars.get(i + 1) {
        Some(&KEYCAP) => true,
        Some(&VS16) => chars.get(i + 2) == Some(&KEYCAP),
        _ => false,
    }
}

/// Length in chars of the emoji cluster starting at `i`, or 0 if none starts here.
fn cluster_len(chars: &[char], i: usize) -> usize {
    if i >= chars.len() {
        return 0;
    }
    if is_regional_indicator(chars[i]) {
        // A flag is exactly a pair when one follows; a lone indicator stands alone.
        return if chars.get(i + 1).is_some_and(|&c| is_regional_indicator(c)) {
            2
        } else {
            1
        };
    }
    if !is_emoji_base(chars[i]) && !is_keycap_base(chars, i) {
        return 0;
    }
    let mut j = i + 1;
    while j < chars.len() {
        let c = chars[j];
        if c == VS15 || c == VS16 || c == KEYCAP || is_skin_tone(c) || is_tag_char(c) {
            j += 1;
        } else if c == ZWJ && chars.get(j + 1).is_some_and(|&n| is_emoji_base(n)) {
            j += 2;
        } else {
            break;
        }
    }
    j - i
}

/// All emoji clusters in `text`, in order, with multiplicity.
pub fn scan_emojis(text: &str) -> Vec<String> {
    strip_and_collect_emojis(text).1
}

/// Removes every emoji cluster from `text` and returns the remaining text
/// together with the ordered list of removed clusters.
///
/// Space runs left behind by a removal are collapsed and the ends trimmed;
/// all other content is preserved byte for byte.
pub fn strip_and_collect_emojis(text: &str) -> (String, Vec<String>) {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut emojis = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let len = cluster_len(&chars, i);
        if len > 0 {
            emojis.push(chars[i..i + len].iter().collect());
            i += len;
        } else {
            out.push(chars[i]);
            i += 1;
        }
    }
    let mut collapsed = String::with_capacity(out.len());
    let mut prev_space = false;
    for c in out.chars() {
        if c == ' ' {
            if !prev_space {
                collapsed.push(c);
            }
            prev_space = true;
        } else {
            collapsed.push(c);
            prev_space = false;
        }
    }
    (collapsed.trim_matches(' ').to_string(), emojis)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strips_and_orders_clusters() {
        let (text, emojis) = strip_and_collect_emojis("good ❤️❤️ night 😂");
        assert_eq!(text, "good night");
        assert_eq!(emojis, vec!["❤️", "❤️", "😂"]);
    }

    #[test]
    fn no_emoji_is_identity() {
        let (text, emojis) = strip_and_collect_emojis("no emoji");
        assert_eq!(text, "no emoji");
        assert!(emojis.is_empty());
    }

    #[test]
    fn zwj_family_is_one_cluster() {
        let family = "\u{1F468}\u{200D}\u{1F469}\u{200D}\u{1F467}";
        let (text, emojis) = strip_and_collect_emojis(&format!("our {family} trip"));
        assert_eq!(text, "our trip");
        assert_eq!(emojis, vec![family.to_string()]);
    }

    #[test]
    fn regional_indicator_pair_is_one_flag() {
        let (text, emojis) = strip_and_collect_emojis("go 🇺🇸 go 🇺🇸🇺🇸");
        assert_eq!(text, "go go");
        assert_eq!(emojis, vec!["🇺🇸", "🇺🇸", "🇺🇸"]);
    }

    #[test]
    fn keycap_sequence_is_emoji_but_plain_digits_are_not() {
        let (text, emojis) = strip_and_collect_emojis("top 1️⃣ of 10");
        assert_eq!(text, "top of 10");
        assert_eq!(emojis, vec!["1\u{FE0F}\u{20E3}"]);
    }

    #[test]
    fn hash_sign_in_hashtags_survives() {
        let (text, emojis) = strip_and_collect_emojis("#lit fire 🔥");
        assert_eq!(text, "#lit fire");
        assert_eq!(emojis, vec!["🔥"]);
    }

    #[test]
    fn skin_tone_and_vs_attach_to_base() {
        let (text, emojis) = strip_and_collect_emojis("hi 👍🏽!");
        assert_eq!(text, "hi !");
        assert_eq!(emojis, vec!["👍🏽"]);
    }

    #[test]
    fn mid_word_removal_keeps_letters() {
        let (text, emojis) = strip_and_collect_emojis("gm❤️gn");
        assert_eq!(text, "gmgn");
        assert_eq!(emojis.len(), 1);
    }
}
