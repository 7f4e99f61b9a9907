//! Vocabularies, id-sequence encoding, and sparse bag-of-words vectors.

pub mod analysis;

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::corpus::LabeledExample;
use crate::error::{Error, Result};

pub const PAD: &str = "<pad>";
pub const UNK: &str = "<unk>";
pub const PAD_ID: usize = 0;
pub const UNK_ID: usize = 1;

/// Token-to-id map with reserved `<pad>`/`<unk>` entries at ids 0 and 1.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    token_to_id: HashMap<String, usize>,
    id_to_token: Vec<String>,
}

impl Vocabulary {
    /// Ranks tokens by (count descending, token ascending), keeps those with
    /// count >= `min_freq`, and assigns dense ids after the reserved pair,
    /// up to `max_size` entries in total.
    pub fn fit<'a>(
        tokens: impl IntoIterator<Item = &'a str>,
        min_freq: usize,
        max_size: usize,
    ) -> Result<Self> {
        if min_freq == 0 {
            return Err(Error::InvalidParam("vocabulary min_freq must be >= 1".into()));
        }
        if max_size < 2 {
            return Err(Error::InvalidParam("vocabulary max_size must be >= 2".into()));
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for tok in tokens {
            *counts.entry(tok).or_insert(0) += 1;
        }
        let mut ranked: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|&(tok, count)| count >= min_freq && tok != PAD && tok != UNK)
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_size - 2);

        let mut id_to_token = vec![PAD.to_string(), UNK.to_string()];
        id_to_token.extend(ranked.into_iter().map(|(tok, _)| tok.to_string()));
        Ok(Self::from_tokens(id_to_token))
    }

    fn from_tokens(id_to_token: Vec<String>) -> Self {
        let token_to_id = id_to_token
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Self { token_to_id, id_to_token }
    }

    /// Id for a token, collapsing unknowns to `<unk>`.
    pub fn id(&self, token: &str) -> usize {
        self.token_to_id.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.token_to_id.contains_key(token)
    }

    pub fn token(&self, id: usize) -> &str {
        &self.id_to_token[id]
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        self.id_to_token.is_empty()
    }

    /// `token<TAB>id` lines in id order.
    pub fn write_tsv(&self, out: &mut impl Write) -> Result<()> {
        for (id, token) in self.id_to_token.iter().enumerate() {
            writeln!(out, "{token}\t{id}")?;
        }
        Ok(())
    }

    pub fn from_tsv(path: &Path) -> Result<Self> {
        let reader = BufReader::new(std::fs::File::open(path)?);
        let mut rows = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (token, id) = line.split_once('\t').ok_or_else(|| Error::Malformed {
                what: "vocabulary line".into(),
                detail: format!("line {}: expected token<TAB>id", lineno + 1),
            })?;
            let id: usize = id.trim().parse().map_err(|_| Error::Malformed {
                what: "vocabulary id".into(),
                detail: format!("line {}: {id:?}", lineno + 1),
            })?;
            rows.push((id, token.to_string()));
        }
        rows.sort();
        let dense = rows.iter().enumerate().all(|(i, (id, _))| i == *id);
        if !dense || rows.len() < 2 {
            return Err(Error::Malformed {
                what: "vocabulary file".into(),
                detail: "ids must be dense from 0 with reserved <pad>/<unk>".into(),
            });
        }
        Ok(Self::from_tokens(rows.into_iter().map(|(_, t)| t).collect()))
    }

    /// Stable content hash, recorded in checkpoints and report rows.
    pub fn stable_hash(&self) -> String {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf).expect("write to vec");
        crate::util::stable_hash_hex(&buf)
    }
}

/// Fixed-length encoded record ready for the classifiers.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedExample {
    pub text_ids: Vec<usize>,
    pub text_len: usize,
    pub hashtag_ids: Vec<usize>,
    pub source_id: usize,
    pub label: usize,
}

/// Encodes tokens against fitted vocabularies: unknowns collapse to `<unk>`,
/// text is truncated to the first `max_len` tokens and padded with `<pad>`.
pub fn encode_example(
    example: &LabeledExample,
    text_vocab: &Vocabulary,
    hashtag_vocab: &Vocabulary,
    max_len: usize,
) -> Result<EncodedExample> {
    if max_len == 0 {
        return Err(Error::InvalidParam("max_len must be >= 1".into()));
    }
    let text_len = example.text_tokens.len().min(max_len);
    let mut text_ids = Vec::with_capacity(max_len);
    text_ids.extend(
        example.text_tokens.iter().take(text_len).map(|t| text_vocab.id(t)),
    );
    text_ids.resize(max_len, PAD_ID);
    let hashtag_ids = example.hashtag_tokens.iter().map(|t| hashtag_vocab.id(t)).collect();
    Ok(EncodedExample {
        text_ids,
        text_len,
        hashtag_ids,
        source_id: example.source_id,
        label: example.label,
    })
}

/// Sorted sparse vector over a fixed dimension.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SparseVector {
    dim: usize,
    entries: Vec<(usize, f64)>,
}

impl SparseVector {
    /// Builds from arbitrary (index, value) pairs: duplicate indices are
    /// summed, zeros dropped, entries sorted.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut acc: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
        for (index, value) in pairs {
            if index >= dim {
                return Err(Error::IdOutOfRange { id: index, size: dim });
            }
            if !value.is_finite() {
                return Err(Error::InvalidParam("sparse values must be finite".into()));
            }
            *acc.entry(index).or_insert(0.0) += value;
        }
        Ok(Self {
            dim,
            entries: acc.into_iter().filter(|&(_, v)| v != 0.0).collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// Value at `index` (zero when absent).
    pub fn get(&self, index: usize) -> f64 {
        match self.entries.binary_search_by_key(&index, |&(i, _)| i) {
            Ok(pos) => self.entries[pos].1,
            Err(_) => 0.0,
        }
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * dense[i]).sum()
    }

    pub fn l1_mass(&self) -> f64 {
        self.entries.iter().map(|&(_, v)| v.abs()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BowWeighting {
    Count,
    Binary,
}

/// Bag-of-words vector over the vocabulary, OOV tokens aggregated into the
/// `<unk>` index.
pub fn bow_vector(tokens: &[String], vocab: &Vocabulary, weighting: BowWeighting) -> SparseVector {
    let pairs = tokens.iter().map(|t| (vocab.id(t), 1.0));
    let mut v = SparseVector::from_pairs(vocab.len(), pairs).expect("ids within vocab");
    if weighting == BowWeighting::Binary {
        for entry in &mut v.entries {
            entry.1 = 1.0;
        }
    }
    v
}
