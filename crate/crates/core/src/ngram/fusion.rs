use serde::{Deserialize, Serialize};

use super::{NGramModel, BOS, EOS};
use crate::error::{Error, Result};
use crate::vocab::Vocabulary;

/// Granularity at which the LM scores hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FusionUnit {
    /// One LM step per emitted CTC token.
    #[default]
    Token,
    /// Subwords are joined at word-start markers; one LM step per word.
    Word,
}

/// Caller-held LM history for incremental scoring.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct FusionState {
    history: Vec<u32>,
    partial: String,
}

/// Adapts an [`NGramModel`] to a CTC vocabulary for shallow fusion.
#[derive(Debug, Clone)]
pub struct LmFusion<'a> {
    model: &'a NGramModel,
    vocab: &'a Vocabulary,
    unit: FusionUnit,
    token_ids: Vec<Option<u32>>,
    bos: Option<u32>,
    eos: u32,
}

impl<'a> LmFusion<'a> {
    pub fn new(model: &'a NGramModel, vocab: &'a Vocabulary, unit: FusionUnit) -> Result<Self> {
        let eos = model
            .word_id(EOS)
            .ok_or_else(|| Error::Config(format!("LM has no {EOS} entry")))?;
        let mut token_ids = vec![None; vocab.len()];
        match unit {
            FusionUnit::Token => {
                for (i, tok) in vocab.tokens().iter().enumerate() {
                    if i == vocab.blank_index() {
                        continue;
                    }
                    token_ids[i] = Some(model.resolve(tok).map_err(|_| {
                        Error::Config(format!(
                            "vocabulary token {tok:?} is not in the LM and the LM has no <unk>"
                        ))
                    })?);
                }
            }
            FusionUnit::Word => {
                if vocab.word_start_marker().is_none() {
                    return Err(Error::Config(
                        "word-level fusion needs a word-start marker".into(),
                    ));
                }
            }
        }
        Ok(Self {
            model,
            vocab,
            unit,
            token_ids,
            bos: model.word_id(BOS),
            eos,
        })
    }

    pub fn unit(&self) -> FusionUnit {
        self.unit
    }

    pub fn initial_state(&self) -> FusionState {
        FusionState {
            history: self.bos.into_iter().collect(),
            partial: String::new(),
        }
    }

    fn push(&self, history: &mut Vec<u32>, id: u32) {
        history.push(id);
        let keep = self.model.order().saturating_sub(1);
        if history.len() > keep {
            history.drain(..history.len() - keep);
        }
    }

    fn score_word(&self, history: &mut Vec<u32>, word: &str) -> Result<f64> {
        let id = self.model.resolve(word).map_err(|_| {
            Error::LanguageModel(format!("word {word:?} is not in the LM and the LM has no <unk>"))
        })?;
        let s = self.model.score_ids(history, id);
        self.push(history, id);
        Ok(s)
    }

    /// Emits `token`; returns the natural-log LM increment and the next state.
    pub fn advance(&self, state: &FusionState, token: usize) -> Result<(f64, FusionState)> {
        let mut next = state.clone();
        match self.unit {
            FusionUnit::Token => {
                let id = self
                    .token_ids
                    .get(token)
                    .copied()
                    .flatten()
                    .ok_or_else(|| Error::usage(format!("token {token} cannot be scored by the LM")))?;
                let s = self.model.score_ids(&next.history, id);
                self.push(&mut next.history, id);
                Ok((s, next))
            }
            FusionUnit::Word => {
                let tok = self
                    .vocab
                    .token(token)
                    .ok_or_else(|| Error::usage(format!("token {token} out of range")))?;
                let marker = self.vocab.word_start_marker().unwrap_or_default();
                let mut inc = 0.0;
                if let Some(rest) = tok.strip_prefix(marker) {
                    if !next.partial.is_empty() {
                        let word = std::mem::take(&mut next.partial);
                        inc = self.score_word(&mut next.history, &word)?;
                    }
                    next.partial.push_str(rest);
                } else {
                    next.partial.push_str(tok);
                }
                Ok((inc, next))
            }
        }
    }

    /// Completes the hypothesis: any pending word, then end-of-sentence.
    pub fn finish(&self, state: &FusionState) -> Result<f64> {
        let mut history = state.history.clone();
        let mut total = 0.0;
        if !state.partial.is_empty() {
            total += self.score_word(&mut history, &state.partial)?;
        }
        Ok(total + self.model.score_ids(&history, self.eos))
    }

    /// Full-sentence LM score for a token sequence, computed incrementally.
    pub fn score_tokens(&self, tokens: &[usize]) -> Result<f64> {
        let mut state = self.initial_state();
        let mut total = 0.0;
        for &t in tokens {
            let (inc, next) = self.advance(&state, t)?;
            total += inc;
            state = next;
        }
        Ok(total + self.finish(&state)?)
    }
}
