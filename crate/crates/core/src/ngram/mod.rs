//! Backoff n-gram language models read from ARPA files.

mod arpa;
mod fusion;

use std::collections::HashMap;
use std::f64::consts::LN_10;
use std::path::Path;

use indexmap::IndexMap;

pub use arpa::parse_arpa;
pub use fusion::{FusionState, FusionUnit, LmFusion};

use crate::error::{Error, Result};

pub const BOS: &str = "<s>";
pub const EOS: &str = "</s>";
pub const UNK: &str = "<unk>";

/// One ARPA entry, stored base-10 exactly as written.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NgramEntry {
    pub log10_prob: f64,
    pub log10_backoff: Option<f64>,
}

/// Backoff n-gram tables; `tables[n - 1]` holds the n-grams, keyed by word ids.
#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    words: Vec<String>,
    ids: HashMap<String, u32>,
    tables: Vec<IndexMap<Box<[u32]>, NgramEntry>>,
}

impl NGramModel {
    pub(crate) fn from_parts(words: Vec<String>, tables: Vec<IndexMap<Box<[u32]>, NgramEntry>>) -> Self {
        let ids = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i as u32))
            .collect();
        Self {
            order: tables.len(),
            words,
            ids,
            tables,
        }
    }

    /// Loads an ARPA file, transparently gunzipping `.gz` content.
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.starts_with(&[0x1f, 0x8b]) {
            let reader = std::io::BufReader::new(flate2::read::GzDecoder::new(&bytes[..]));
            parse_arpa(reader)
        } else {
            parse_arpa(&bytes[..])
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    /// Entry count for order `n` (1-based).
    pub fn count(&self, n: usize) -> usize {
        self.tables.get(n.wrapping_sub(1)).map_or(0, IndexMap::len)
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word_id(&self, word: &str) -> Option<u32> {
        self.ids.get(word).copied()
    }

    pub fn has_unk(&self) -> bool {
        self.ids.contains_key(UNK)
    }

    /// Maps a word to its id, falling back to `<unk>`.
    pub fn resolve(&self, word: &str) -> Result<u32> {
        self.word_id(word)
            .or_else(|| self.word_id(UNK))
            .ok_or_else(|| Error::LanguageModel(format!("{word:?} not in LM and no {UNK} entry")))
    }

    pub fn entry(&self, ngram: &[u32]) -> Option<&NgramEntry> {
        self.tables.get(ngram.len().checked_sub(1)?)?.get(ngram)
    }

    pub(crate) fn tables(&self) -> &[IndexMap<Box<[u32]>, NgramEntry>] {
        &self.tables
    }

    /// Base-10 backoff query. Only the last `order − 1` history words are used.
    pub fn score_ids_log10(&self, history: &[u32], word: u32) -> f64 {
        let ctx_len = history.len().min(self.order - 1);
        let history = &history[history.len() - ctx_len..];
        let mut key: Vec<u32> = Vec::with_capacity(ctx_len + 1);
        let mut backoff = 0.0;
        for n in (0..=ctx_len).rev() {
            let ctx = &history[ctx_len - n..];
            key.clear();
            key.extend_from_slice(ctx);
            key.push(word);
            if let Some(e) = self.tables[n].get(key.as_slice()) {
                return backoff + e.log10_prob;
            }
            if n > 0 {
                if let Some(b) = self.tables[n - 1].get(ctx).and_then(|e| e.log10_backoff) {
                    backoff += b;
                }
            }
        }
        // Every id comes from the unigram table, so the loop always returns.
        unreachable!("word id {word} missing from unigram table")
    }

    /// Natural-log probability of `word` after `history` (ids).
    pub fn score_ids(&self, history: &[u32], word: u32) -> f64 {
        self.score_ids_log10(history, word) * LN_10
    }

    /// Natural-log probability of `token` after `history`.
    pub fn score_token(&self, history: &[&str], token: &str) -> Result<f64> {
        let hist = history
            .iter()
            .map(|w| self.resolve(w))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.score_ids(&hist, self.resolve(token)?))
    }

    /// Natural-log probability of a whole sentence, with `<s>` prepended to the
    /// history and `</s>` scored at the end.
    pub fn score_sequence(&self, tokens: &[&str]) -> Result<f64> {
        let mut history: Vec<u32> = self.word_id(BOS).into_iter().collect();
        let mut total = 0.0;
        for tok in tokens {
            let id = self.resolve(tok)?;
            total += self.score_ids(&history, id);
            history.push(id);
        }
        let eos = self
            .word_id(EOS)
            .ok_or_else(|| Error::LanguageModel(format!("LM has no {EOS} entry")))?;
        Ok(total + self.score_ids(&history, eos))
    }

    /// Serializes back to ARPA text.
    pub fn to_arpa(&self) -> String {
        arpa::write_arpa(self)
    }
}
