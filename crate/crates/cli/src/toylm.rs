//! Bigram ARPA estimation for the synthetic corpus.

use std::collections::BTreeMap;
use std::fmt::Write as _;

const BOS: &str = "<s>";
const EOS: &str = "</s>";

/// Interpolated absolute discounting over an add-one unigram.
///
/// `vocabulary` lists every word the model must cover, seen or not. Each
/// history's backoff weight makes its distribution sum to one.
pub fn bigram_arpa(sentences: &[Vec<String>], vocabulary: &[String], discount: f64) -> String {
    let mut words: Vec<&str> = vocabulary.iter().map(String::as_str).collect();
    words.push(EOS);
    let index: BTreeMap<&str, usize> = words.iter().enumerate().map(|(i, w)| (*w, i)).collect();

    let mut unigram = vec![0usize; words.len()];
    // (history, word) with history `None` for <s>.
    let mut bigram: BTreeMap<(Option<usize>, usize), usize> = BTreeMap::new();
    for s in sentences {
        let mut prev = None;
        for w in s.iter().map(|w| index[w.as_str()]).chain([index[EOS]]) {
            unigram[w] += 1;
            *bigram.entry((prev, w)).or_default() += 1;
            prev = Some(w);
        }
    }
    let total: usize = unigram.iter().sum();
    let p_uni: Vec<f64> = unigram
        .iter()
        .map(|&c| (c as f64 + 1.0) / (total + words.len()) as f64)
        .collect();

    let mut history_count: BTreeMap<Option<usize>, (usize, usize)> = BTreeMap::new();
    for (&(h, _), &c) in &bigram {
        let e = history_count.entry(h).or_default();
        e.0 += c;
        e.1 += 1;
    }
    let mut probs: BTreeMap<(Option<usize>, usize), f64> = BTreeMap::new();
    let mut backoff: BTreeMap<Option<usize>, f64> = BTreeMap::new();
    for (&h, &(ch, types)) in &history_count {
        let lambda = discount * types as f64 / ch as f64;
        let (mut listed, mut listed_uni) = (0.0, 0.0);
        for (&(hh, w), &c) in bigram.range((h, 0)..=(h, usize::MAX)) {
            debug_assert_eq!(hh, h);
            let p = (c as f64 - discount).max(0.0) / ch as f64 + lambda * p_uni[w];
            probs.insert((h, w), p);
            listed += p;
            listed_uni += p_uni[w];
        }
        backoff.insert(h, (1.0 - listed) / (1.0 - listed_uni));
    }

    let name = |h: Option<usize>| h.map_or(BOS, |i| words[i]);
    let mut out = String::from("\\data\\\n");
    let _ = writeln!(out, "ngram 1={}", words.len() + 1);
    let _ = writeln!(out, "ngram 2={}\n", probs.len());
    out.push_str("\\1-grams:\n");
    let bo = |h: Option<usize>| backoff.get(&h).map(|b| format!("\t{:.6}", b.log10())).unwrap_or_default();
    let _ = writeln!(out, "-99\t{BOS}{}", bo(None));
    for (i, w) in words.iter().enumerate() {
        let _ = writeln!(out, "{:.6}\t{w}{}", p_uni[i].log10(), bo(Some(i)));
    }
    out.push_str("\n\\2-grams:\n");
    for (&(h, w), p) in &probs {
        let _ = writeln!(out, "{:.6}\t{} {}", p.log10(), name(h), words[w]);
    }
    out.push_str("\n\\end\\\n");
    out
}
