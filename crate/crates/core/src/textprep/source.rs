//! Application-source canonicalization.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub const OTHER: &str = "other";
pub const UNKNOWN: &str = "unknown";

/// Default number of distinct sources kept before collapsing into `other`.
pub const DEFAULT_TOP_K: usize = 10;

/// Raw client strings mapped to canonical category names. Everything else is
/// slugified; sources outside the fitted top-K collapse to `other`.
fn builtin_aliases() -> Vec<(&'static str, &'static str)> {
    vec![
        ("twitter for iphone", "twitter_iphone"),
        ("twitter for android", "twitter_android"),
        ("twitter for ipad", "twitter_ipad"),
        ("twitter web app", "twitter_web"),
        ("twitter web client", "twitter_web"),
        ("tweetdeck", "tweetdeck"),
        ("instagram", "instagram"),
        ("tumblr", "tumblr"),
        ("facebook", "facebook"),
        ("ifttt", "ifttt"),
    ]
}

fn slugify(raw: &str) -> String {
    let mut slug = String::new();
    let mut pending_sep = false;
    for c in raw.trim().to_lowercase().chars() {
        if c.is_ascii_alphanumeric() {
            if pending_sep && !slug.is_empty() {
                slug.push('_');
            }
            pending_sep = false;
            slug.push(c);
        } else {
            pending_sep = true;
        }
    }
    slug
}

/// Canonical source names with dense ids. `other` and `unknown` are always
/// present.
#[derive(Debug, Clone)]
pub struct SourceTable {
    names: Vec<String>,
    ids: HashMap<String, usize>,
    aliases: HashMap<String, String>,
}

impl SourceTable {
    /// Fits the table on a corpus: the top `k` canonical sources by frequency
    /// (count descending, name ascending) receive ids, followed by `other`
    /// and `unknown`.
    pub fn fit<'a>(sources: impl IntoIterator<Item = Option<&'a str>>, k: usize) -> Result<Self> {
        Self::fit_with_aliases(sources, k, &[])
    }

    /// Like [`SourceTable::fit`] with extra `(raw alias, canonical)` rows
    /// merged over the builtin alias map before counting.
    pub fn fit_with_aliases<'a>(
        sources: impl IntoIterator<Item = Option<&'a str>>,
        k: usize,
        extra: &[(String, String)],
    ) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParam("source table K must be >= 1".into()));
        }
        let mut aliases: HashMap<String, String> = builtin_aliases()
            .into_iter()
            .map(|(raw, canon)| (raw.to_string(), canon.to_string()))
            .collect();
        for (raw, canon) in extra {
            aliases.insert(raw.trim().to_lowercase(), canon.trim().to_string());
        }
        let mut counts: HashMap<String, u64> = HashMap::new();
        for source in sources {
            if let Some(canon) = canonical_name(source, &aliases) {
                *counts.entry(canon).or_insert(0) += 1;
            }
        }
        let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut names: Vec<String> = ranked
            .into_iter()
            .take(k)
            .map(|(name, _)| name)
            .filter(|n| n != OTHER && n != UNKNOWN)
            .collect();
        names.push(OTHER.to_string());
        names.push(UNKNOWN.to_string());
        Ok(Self::from_names(names, aliases))
    }

    fn from_names(names: Vec<String>, aliases: HashMap<String, String>) -> Self {
        let ids = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        Self { names, ids, aliases }
    }

    /// Maps a raw source string to its id: alias lookup after trimming and
    /// lowercasing, unseen sources to `other`, absent to `unknown`.
    pub fn source_id(&self, raw: Option<&str>) -> usize {
        match canonical_name(raw, &self.aliases) {
            None => self.unknown_id(),
            Some(canon) => self.ids.get(&canon).copied().unwrap_or_else(|| self.other_id()),
        }
    }

    pub fn id_of_name(&self, canonical: &str) -> Option<usize> {
        self.ids.get(canonical).copied()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn other_id(&self) -> usize {
        self.ids[OTHER]
    }

    pub fn unknown_id(&self) -> usize {
        self.ids[UNKNOWN]
    }

    /// One canonical name per line; line number is the id.
    pub fn write_names(&self, out: &mut impl Write) -> Result<()> {
        for name in &self.names {
            writeln!(out, "{name}")?;
        }
        Ok(())
    }

    /// `raw alias<TAB>canonical` lines, sorted for reproducible files.
    pub fn write_aliases(&self, out: &mut impl Write) -> Result<()> {
        let mut rows: Vec<_> = self.aliases.iter().collect();
        rows.sort();
        for (raw, canon) in rows {
            writeln!(out, "{raw}\t{canon}")?;
        }
        Ok(())
    }

    pub fn from_files(names_path: &Path, aliases_path: &Path) -> Result<Self> {
        let names: Vec<String> = std::fs::read_to_string(names_path)?
            .lines()
            .map(|l| l.trim().to_string())
            .filter(|l| !l.is_empty())
            .collect();
        if !names.iter().any(|n| n == OTHER) || !names.iter().any(|n| n == UNKNOWN) {
            return Err(Error::Malformed {
                what: "source table".into(),
                detail: "missing required other/unknown entries".into(),
            });
        }
        let aliases = read_alias_tsv(aliases_path)?
            .into_iter()
            .map(|(raw, canon)| (raw.to_lowercase(), canon))
            .collect();
        Ok(Self::from_names(names, aliases))
    }

    /// Stable content hash, recorded in checkpoints.
    pub fn stable_hash(&self) -> String {
        let mut buf = Vec::new();
        self.write_names(&mut buf).expect("write to vec");
        crate::util::stable_hash_hex(&buf)
    }
}

fn canonical_name(raw: Option<&str>, aliases: &HashMap<String, String>) -> Option<String> {
    let raw = raw?.trim();
    if raw.is_empty() {
        return None;
    }
    let key = raw.to_lowercase();
    Some(match aliases.get(&key) {
        Some(canon) => canon.clone(),
        None => {
            let slug = slugify(raw);
            if slug.is_empty() {
                return None;
            }
            slug
        }
    })
}

/// Reads `raw alias<TAB>canonical` lines.
pub fn read_alias_tsv(path: &Path) -> Result<Vec<(String, String)>> {
    let reader = BufReader::new(std::fs::File::open(path)?);
    let mut rows = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let (raw, canon) = line.split_once('\t').ok_or_else(|| Error::Malformed {
            what: "source alias line".into(),
            detail: format!("line {}: expected alias<TAB>canonical", lineno + 1),
        })?;
        rows.push((raw.to_string(), canon.to_string()));
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fit(sources: &[Option<&str>], k: usize) -> SourceTable {
        SourceTable::fit(sources.iter().copied(), k).unwrap()
    }

    #[test]
    fn top_k_plus_fallbacks() {
        let mut sources = vec![Some("Instagram"); 6];
        sources.extend(vec![Some("Twitter for iPhone"); 3]);
        sources.push(Some("RareApp 3.1"));
        let table = fit(&sources, 2);
        assert_eq!(table.names(), &["instagram", "twitter_iphone", "other", "unknown"]);
        assert_eq!(table.source_id(Some("Twitter for iPhone")), 1);
        assert_eq!(table.source_id(Some("SomeRandomApp 3.1")), table.other_id());
        assert_eq!(table.source_id(None), table.unknown_id());
        assert_eq!(table.source_id(Some("   ")), table.unknown_id());
    }

    #[test]
    fn k_larger_than_distinct_keeps_all() {
        let table = fit(&[Some("Instagram"), Some("Tumblr")], 10);
        assert_eq!(table.names(), &["instagram", "tumblr", "other", "unknown"]);
    }

    #[test]
    fn ranking_is_count_desc_then_name_asc() {
        let table = fit(&[Some("Tumblr"), Some("Instagram")], 2);
        assert_eq!(table.names()[0], "instagram");
        assert_eq!(table.names()[1], "tumblr");
    }

    #[test]
    fn slug_for_unaliased_sources() {
        let table = fit(&[Some("My Cool App!"), Some("My Cool App!")], 1);
        assert_eq!(table.names()[0], "my_cool_app");
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let names = dir.path().join("sources.txt");
        let aliases = dir.path().join("aliases.tsv");
        let table = fit(&[Some("Instagram"), Some("Twitter Web App")], 5);
        let mut buf = Vec::new();
        table.write_names(&mut buf).unwrap();
        std::fs::write(&names, &buf).unwrap();
        buf.clear();
        table.write_aliases(&mut buf).unwrap();
        std::fs::write(&aliases, &buf).unwrap();

        let back = SourceTable::from_files(&names, &aliases).unwrap();
        assert_eq!(back.names(), table.names());
        assert_eq!(back.source_id(Some("Twitter Web Client")), table.source_id(Some("Twitter Web App")));
        assert_eq!(back.stable_hash(), table.stable_hash());
    }
}
