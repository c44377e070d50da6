use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

pub const F1_DEFINITION: &str = "OOV F1: per utterance and term, TP += min(hyp count, ref count); \
precision = sum TP / sum hyp count, recall = sum TP / sum ref count, F1 = 2PR/(P+R)";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct TermCounts {
    pub true_positives: usize,
    pub hypothesis: usize,
    pub reference: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OovReport {
    pub per_term: BTreeMap<String, TermCounts>,
    pub true_positives: usize,
    pub hypothesis_count: usize,
    pub reference_count: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn counts<'a>(words: &'a [String], terms: &BTreeSet<String>) -> HashMap<&'a str, usize> {
    let mut m = HashMap::new();
    for w in words.iter().filter(|w| terms.contains(*w)) {
        *m.entry(w.as_str()).or_insert(0) += 1;
    }
    m
}

/// Min-count OOV detection scores over paired reference/hypothesis word lists.
pub fn oov_f1(
    references: &[Vec<String>],
    hypotheses: &[Vec<String>],
    oov_terms: &BTreeSet<String>,
) -> Result<OovReport> {
    if references.len() != hypotheses.len() {
        return Err(Error::usage(format!(
            "{} references but {} hypotheses",
            references.len(),
            hypotheses.len()
        )));
    }
    let mut per_term: BTreeMap<String, TermCounts> =
        oov_terms.iter().map(|t| (t.clone(), TermCounts::default())).collect();
    for (r, h) in references.iter().zip(hypotheses) {
        let rc = counts(r, oov_terms);
        let hc = counts(h, oov_terms);
        for (term, tc) in per_term.iter_mut() {
            let nr = rc.get(term.as_str()).copied().unwrap_or(0);
            let nh = hc.get(term.as_str()).copied().unwrap_or(0);
            tc.reference += nr;
            tc.hypothesis += nh;
            tc.true_positives += nr.min(nh);
        }
    }
    let tp = per_term.values().map(|c| c.true_positives).sum();
    let nh = per_term.values().map(|c| c.hypothesis).sum();
    let nr = per_term.values().map(|c| c.reference).sum();
    let precision = ratio(tp, nh);
    let recall = ratio(tp, nr);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(OovReport {
        per_term,
        true_positives: tp,
        hypothesis_count: nh,
        reference_count: nr,
        precision,
        recall,
        f1,
    })
}

/// Reference words (case-folded) absent from the training vocabulary.
pub fn mine_oov(references: &[Vec<String>], training_vocabulary: &HashSet<String>) -> BTreeSet<String> {
    let known: HashSet<String> = training_vocabulary.iter().map(|w| w.to_lowercase()).collect();
    references
        .iter()
        .flatten()
        .map(|w| w.to_lowercase())
        .filter(|w| !known.contains(w))
        .collect()
}

/// Whitespace-separated word list.
pub fn load_word_list(path: impl AsRef<Path>) -> Result<HashSet<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::usage(format!("cannot read word list {}: {e}", path.display())))?;
    Ok(text.split_whitespace().map(str::to_string).collect())
}
