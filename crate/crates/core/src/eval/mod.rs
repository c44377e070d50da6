//! Word error rate and OOV-detection metrics.

mod oov;
mod report;
mod wer;

pub use oov::{load_word_list, mine_oov, oov_f1, OovReport, TermCounts, F1_DEFINITION};
pub use report::{parse_run_label, EvalReport, RunEvaluation, RunInput, UtteranceErrors};
pub use wer::{normalize_words, word_error_rate, ErrorCounts, TextNormalization};
