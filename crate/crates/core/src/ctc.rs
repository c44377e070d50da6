//! CTC alignment helpers.

use crate::error::{Error, Result};
use crate::matrix::ScoreMatrix;
use crate::numeric::log_add;

/// Merges consecutive duplicates, then drops blanks.
pub fn collapse_ctc(path: &[usize], blank_index: usize, vocab_size: usize) -> Result<Vec<usize>> {
    if let Some(&bad) = path.iter().find(|&&i| i >= vocab_size) {
        return Err(Error::usage(format!(
            "token index {bad} out of range for vocabulary of {vocab_size}"
        )));
    }
    Ok(collapse_unchecked(path, blank_index))
}

pub(crate) fn collapse_unchecked(path: &[usize], blank_index: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut prev = None;
    for &tok in path {
        if Some(tok) != prev && tok != blank_index {
            out.push(tok);
        }
        prev = Some(tok);
    }
    out
}

/// Log of the summed score of every alignment path collapsing to `labels`
/// (the CTC forward algorithm over unnormalized log scores).
pub fn label_log_score(scores: &ScoreMatrix, labels: &[usize], blank_index: usize) -> f64 {
    let t_len = scores.frames();
    // Extended label sequence: blank, l1, blank, l2, ..., blank.
    let ext_len = 2 * labels.len() + 1;
    let ext = |s: usize| if s.is_multiple_of(2) { blank_index } else { labels[s / 2] };
    let mut alpha = vec![f64::NEG_INFINITY; ext_len];
    alpha[0] = scores.get(0, blank_index);
    if ext_len > 1 {
        alpha[1] = scores.get(0, ext(1));
    }
    let mut next = vec![f64::NEG_INFINITY; ext_len];
    for t in 1..t_len {
        for s in 0..ext_len {
            let mut acc = alpha[s];
            if s >= 1 {
                acc = log_add(acc, alpha[s - 1]);
            }
            if s >= 2 && ext(s) != blank_index && ext(s) != ext(s - 2) {
                acc = log_add(acc, alpha[s - 2]);
            }
            next[s] = acc + scores.get(t, ext(s));
        }
        std::mem::swap(&mut alpha, &mut next);
    }
    if ext_len == 1 {
        alpha[0]
    } else {
        log_add(alpha[ext_len - 1], alpha[ext_len - 2])
    }
}
