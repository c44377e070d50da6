//! Internal language model estimation (ILME) for CTC speech recognition.
//!
//! The pipeline masks partitions of the acoustic input, re-scores each masked
//! copy, estimates the model's internal LM from the posteriors that moved, and
//! subtracts it from the original log-posteriors before prefix beam search with
//! optional n-gram shallow fusion. WER and OOV-F1 evaluation close the loop.

pub mod acoustic;
pub mod ctc;
pub mod decoder;
pub mod error;
pub mod eval;
mod hypothesis;
pub mod ilme;
pub mod lpm;
pub mod masking;
mod matrix;
pub mod ngram;
pub mod numeric;
pub mod toy;
mod vocab;

pub use acoustic::{score_batch, AcousticScorer, FileScorer, MaskKey, ScoreRequest, ToyConvModel};
pub use ctc::collapse_ctc;
pub use decoder::{beam_decode, decode_corpus, greedy_decode, DecodeConfig, DecodeMode};
pub use error::{Error, Result};
pub use hypothesis::Hypothesis;
pub use ilme::{adjust_scores, estimate_ilm, run_ilme, IlmConfig, IlmEstimate};
pub use lpm::{load_lpm, store_lpm};
pub use masking::{apply_mask, MaskPlan};
pub use matrix::{FeatureSequence, LogPosteriorMatrix, ScoreMatrix};
pub use ngram::{NGramModel, parse_arpa};
pub use numeric::{log_softmax, log_sum_exp};
pub use vocab::Vocabulary;
