use std::collections::{BTreeSet, HashMap};

use ctc_ilme::eval::{oov_f1, word_error_rate, ErrorCounts};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Textbook full-table edit distance.
fn edit_distance(r: &[String], h: &[String]) -> usize {
    let mut d = vec![vec![0usize; h.len() + 1]; r.len() + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for (j, cell) in d[0].iter_mut().enumerate() {
        *cell = j;
    }
    for i in 1..=r.len() {
        for j in 1..=h.len() {
            let sub = d[i - 1][j - 1] + usize::from(r[i - 1] != h[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    d[r.len()][h.len()]
}

fn words(rng: &mut ChaCha8Rng, max: usize) -> Vec<String> {
    let n = rng.gen_range(0..=max);
    (0..n).map(|_| ["a", "b", "c", "d"][rng.gen_range(0..4)].to_string()).collect()
}

#[test]
fn wer_matches_independent_dp() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..500 {
        let r = words(&mut rng, 12);
        let h = words(&mut rng, 12);
        let c = word_error_rate(&r, &h);
        assert_eq!(c.edits(), edit_distance(&r, &h), "{r:?} vs {h:?}");
        assert_eq!(c.reference_words, r.len());
        // Substitutions plus deletions account for every reference word not matched.
        assert!(c.substitutions + c.deletions <= r.len());
        assert_eq!(h.len() + c.deletions, r.len() + c.insertions);
    }
}

#[test]
fn corpus_wer_is_pooled_not_averaged() {
    let s = |t: &str| t.split_whitespace().map(str::to_string).collect::<Vec<_>>();
    let pairs = [(s("a b c d e f g h i j"), s("a b c d e f g h i j")), (s("x"), s("y"))];
    let mut total = ErrorCounts::default();
    for (r, h) in &pairs {
        total.accumulate(&word_error_rate(r, h));
    }
    // One error over eleven reference words, not the mean of 0.0 and 1.0.
    assert_eq!(total.wer(), 1.0 / 11.0);
}

#[test]
fn oov_f1_matches_naive_counting() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let vocab = ["cats", "dogs", "mat", "the", "owls"];
    for _ in 0..100 {
        let n_utt = rng.gen_range(1..8);
        let mut gen = || -> Vec<String> {
            (0..rng.gen_range(0..6)).map(|_| vocab[rng.gen_range(0..vocab.len())].to_string()).collect()
        };
        let refs: Vec<Vec<String>> = (0..n_utt).map(|_| gen()).collect();
        let hyps: Vec<Vec<String>> = (0..n_utt).map(|_| gen()).collect();
        let terms: BTreeSet<String> = ["cats", "dogs", "owls"].iter().map(|s| s.to_string()).collect();

        let (mut tp, mut nh, mut nr) = (0usize, 0usize, 0usize);
        for (r, h) in refs.iter().zip(&hyps) {
            let mut rc: HashMap<&str, usize> = HashMap::new();
            let mut hc: HashMap<&str, usize> = HashMap::new();
            for w in r {
                if terms.contains(w) {
                    *rc.entry(w).or_default() += 1;
                    nr += 1;
                }
            }
            for w in h {
                if terms.contains(w) {
                    *hc.entry(w).or_default() += 1;
                    nh += 1;
                }
            }
            for (w, c) in &rc {
                tp += (*c).min(hc.get(w).copied().unwrap_or(0));
            }
        }
        let p = if nh == 0 { 0.0 } else { tp as f64 / nh as f64 };
        let rcl = if nr == 0 { 0.0 } else { tp as f64 / nr as f64 };
        let f1 = if p + rcl == 0.0 { 0.0 } else { 2.0 * p * rcl / (p + rcl) };

        let report = oov_f1(&refs, &hyps, &terms).unwrap();
        assert_eq!((report.true_positives, report.hypothesis_count, report.reference_count), (tp, nh, nr));
        assert!((report.f1 - f1).abs() < 1e-12);
    }
}
