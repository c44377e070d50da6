use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TextNormalization {
    pub case_fold: bool,
    pub strip_punctuation: bool,
}

impl Default for TextNormalization {
    fn default() -> Self {
        Self {
            case_fold: true,
            strip_punctuation: true,
        }
    }
}

/// Whitespace tokenization after optional case folding and ASCII punctuation
/// removal (apostrophes are kept).
pub fn normalize_words(text: &str, norm: &TextNormalization) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|w| {
            let mut w: String = if norm.strip_punctuation {
                w.chars().filter(|c| !c.is_ascii_punctuation() || *c == '\'').collect()
            } else {
                w.to_string()
            };
            if norm.case_fold {
                w = w.to_lowercase();
            }
            (!w.is_empty()).then_some(w)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ErrorCounts {
    pub substitutions: usize,
    pub deletions: usize,
    pub insertions: usize,
    pub reference_words: usize,
}

impl ErrorCounts {
    pub fn edits(&self) -> usize {
        self.substitutions + self.deletions + self.insertions
    }

    /// `(S + D + I) / R`; with an empty reference the denominator is 1.
    pub fn wer(&self) -> f64 {
        self.edits() as f64 / self.reference_words.max(1) as f64
    }

    pub fn accumulate(&mut self, other: &ErrorCounts) {
        self.substitutions += other.substitutions;
        self.deletions += other.deletions;
        self.insertions += other.insertions;
        self.reference_words += other.reference_words;
    }
}

/// Unit-cost Levenshtein alignment. Among minimal alignments, the one with
/// fewest insertions, then fewest deletions, is reported.
pub fn word_error_rate<S: AsRef<str>>(reference: &[S], hypothesis: &[S]) -> ErrorCounts {
    // (edits, insertions, deletions), compared lexicographically.
    type Cost = (usize, usize, usize);
    let h_len = hypothesis.len();
    let mut prev: Vec<Cost> = (0..=h_len).map(|j| (j, j, 0)).collect();
    let mut cur: Vec<Cost> = vec![(0, 0, 0); h_len + 1];
    for (i, r) in reference.iter().enumerate() {
        cur[0] = (i + 1, 0, i + 1);
        for (j, h) in hypothesis.iter().enumerate() {
            let diag = prev[j];
            let matched = if r.as_ref() == h.as_ref() {
                diag
            } else {
                (diag.0 + 1, diag.1, diag.2)
            };
            let del = (prev[j + 1].0 + 1, prev[j + 1].1, prev[j + 1].2 + 1);
            let ins = (cur[j].0 + 1, cur[j].1 + 1, cur[j].2);
            cur[j + 1] = matched.min(del).min(ins);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    let (edits, insertions, deletions) = prev[h_len];
    ErrorCounts {
        substitutions: edits - insertions - deletions,
        deletions,
        insertions,
        reference_words: reference.len(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(s: &str) -> Vec<&str> {
        s.split_whitespace().collect()
    }

    #[test]
    fn examples() {
        let c = word_error_rate(&w("a b c"), &w("a b c"));
        assert_eq!(c, ErrorCounts { reference_words: 3, ..Default::default() });
        assert_eq!(c.wer(), 0.0);
        let c = word_error_rate(&w("a b c"), &w("a x c"));
        assert_eq!((c.substitutions, c.deletions, c.insertions, c.reference_words), (1, 0, 0, 3));
        assert!((c.wer() - 1.0 / 3.0).abs() < 1e-15);
        let c = word_error_rate(&w("a b"), &w(""));
        assert_eq!((c.substitutions, c.deletions, c.insertions, c.reference_words), (0, 2, 0, 2));
        assert_eq!(c.wer(), 1.0);
    }

    #[test]
    fn empty_reference() {
        let c = word_error_rate(&w(""), &w("x y"));
        assert_eq!((c.insertions, c.reference_words), (2, 0));
        assert_eq!(c.wer(), 2.0);
    }

    #[test]
    fn prefers_substitutions_over_indels() {
        // "a b" → "b a": 2 substitutions or 1 ins + 1 del; both cost 2.
        let c = word_error_rate(&w("a b"), &w("b a"));
        assert_eq!((c.substitutions, c.insertions, c.deletions), (2, 0, 0));
    }

    #[test]
    fn normalization() {
        let n = TextNormalization::default();
        assert_eq!(normalize_words("Hello, World! don't", &n), vec!["hello", "world", "don't"]);
        assert_eq!(normalize_words(" -- ", &n), Vec::<String>::new());
        let raw = TextNormalization { case_fold: false, strip_punctuation: false };
        assert_eq!(normalize_words("Hi.", &raw), vec!["Hi."]);
    }
}
