use std::collections::HashMap;
use std::path::Path;

use crate::error::{Error, Result};

/// Token inventory of a CTC model, including the blank symbol.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    blank_index: usize,
    word_start_marker: Option<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new(
        tokens: Vec<String>,
        blank_index: usize,
        word_start_marker: Option<String>,
    ) -> Result<Self> {
        if tokens.len() < 2 {
            return Err(Error::usage(format!(
                "vocabulary needs a blank and at least one emitting token, got {} tokens",
                tokens.len()
            )));
        }
        if blank_index >= tokens.len() {
            return Err(Error::usage(format!(
                "blank index {blank_index} out of range for {} tokens",
                tokens.len()
            )));
        }
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, tok) in tokens.iter().enumerate() {
            if index.insert(tok.clone(), i).is_some() {
                return Err(Error::usage(format!("duplicate token {tok:?}")));
            }
        }
        Ok(Self {
            tokens,
            blank_index,
            word_start_marker: word_start_marker.filter(|m| !m.is_empty()),
            index,
        })
    }

    /// Parses one token per line; `blank_token` names the blank entry.
    pub fn parse(text: &str, blank_token: &str, word_start_marker: Option<String>) -> Result<Self> {
        let tokens: Vec<String> = text
            .lines()
            .map(|l| l.trim_end_matches('\r').to_string())
            .collect();
        let blank_index = tokens
            .iter()
            .position(|t| t == blank_token)
            .ok_or_else(|| Error::usage(format!("blank token {blank_token:?} not in vocabulary")))?;
        Self::new(tokens, blank_index, word_start_marker)
    }

    pub fn load(
        path: impl AsRef<Path>,
        blank_token: &str,
        word_start_marker: Option<String>,
    ) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, blank_token, word_start_marker)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn blank_index(&self) -> usize {
        self.blank_index
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn token(&self, index: usize) -> Option<&str> {
        self.tokens.get(index).map(String::as_str)
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn word_start_marker(&self) -> Option<&str> {
        self.word_start_marker.as_deref()
    }

    /// True when `index` opens a new word under the subword convention.
    pub fn starts_word(&self, index: usize) -> bool {
        match (&self.word_start_marker, self.tokens.get(index)) {
            (Some(m), Some(tok)) => tok.starts_with(m.as_str()),
            _ => false,
        }
    }

    /// Converts a collapsed token sequence into space-separated words.
    ///
    /// With a word-start marker, marked tokens open a new word and the marker
    /// is stripped; otherwise every token is its own word.
    pub fn detokenize(&self, tokens: &[usize]) -> String {
        let mut out = String::new();
        match &self.word_start_marker {
            Some(marker) => {
                for &t in tokens {
                    let Some(tok) = self.tokens.get(t) else { continue };
                    if let Some(rest) = tok.strip_prefix(marker.as_str()) {
                        if !out.is_empty() {
                            out.push(' ');
                        }
                        out.push_str(rest);
                    } else {
                        out.push_str(tok);
                    }
                }
            }
            None => {
                for &t in tokens {
                    let Some(tok) = self.tokens.get(t) else { continue };
                    if !out.is_empty() {
                        out.push(' ');
                    }
                    out.push_str(tok);
                }
            }
        }
        out.split_whitespace().collect::<Vec<_>>().join(" ")
    }
}
