//! CTC decoding over log-domain score matrices.

mod corpus;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use corpus::{
    decode_corpus, render_nbest, render_transcripts, CorpusJob, CorpusUtterance, DecodeMode,
    MaskStrategy, UtteranceDecode, UtteranceResult,
};

use crate::ctc::collapse_unchecked;
use crate::error::{Error, Result};
use crate::hypothesis::Hypothesis;
use crate::matrix::ScoreMatrix;
use crate::ngram::{FusionState, FusionUnit, LmFusion};
use crate::numeric::log_add;
use crate::vocab::Vocabulary;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecodeConfig {
    pub beam_size: usize,
    /// External LM weight λ_T.
    pub lambda_lm: f64,
    pub token_insertion_bonus: f64,
    /// Skip non-blank tokens scoring below the frame's best minus this margin.
    pub prune_log_threshold: Option<f64>,
    pub fusion_unit: FusionUnit,
}

impl Default for DecodeConfig {
    fn default() -> Self {
        Self {
            beam_size: 50,
            lambda_lm: 1.0,
            token_insertion_bonus: 0.0,
            prune_log_threshold: None,
            fusion_unit: FusionUnit::Token,
        }
    }
}

impl DecodeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.beam_size == 0 {
            return Err(Error::Config("beam_size must be >= 1".into()));
        }
        if !(self.lambda_lm >= 0.0 && self.lambda_lm.is_finite()) {
            return Err(Error::Config(format!("lambda_lm must be finite and >= 0, got {}", self.lambda_lm)));
        }
        if !self.token_insertion_bonus.is_finite() {
            return Err(Error::Config("token_insertion_bonus must be finite".into()));
        }
        if let Some(p) = self.prune_log_threshold {
            if p.is_nan() || p < 0.0 {
                return Err(Error::Config(format!("prune_log_threshold must be >= 0, got {p}")));
            }
        }
        Ok(())
    }
}

fn check_shape(scores: &ScoreMatrix, vocab: &Vocabulary) -> Result<()> {
    if scores.vocab_size() != vocab.len() {
        return Err(Error::Config(format!(
            "score matrix has {} columns, vocabulary has {} tokens",
            scores.vocab_size(),
            vocab.len()
        )));
    }
    Ok(())
}

/// Per-frame argmax (ties to the lowest index), then CTC collapse.
pub fn greedy_decode(scores: &ScoreMatrix, vocab: &Vocabulary) -> Result<Hypothesis> {
    check_shape(scores, vocab)?;
    let mut path = Vec::with_capacity(scores.frames());
    let mut acoustic = 0.0;
    for t in 0..scores.frames() {
        let row = scores.row(t);
        let mut best = 0;
        for (i, &v) in row.iter().enumerate().skip(1) {
            if v > row[best] {
                best = i;
            }
        }
        acoustic += row[best];
        path.push(best);
    }
    Ok(Hypothesis {
        tokens: collapse_unchecked(&path, vocab.blank_index()),
        acoustic_score: acoustic,
        ilm_score: 0.0,
        lm_score: 0.0,
        bonus_score: 0.0,
        total_score: acoustic,
    })
}

#[derive(Debug, Clone)]
struct Beam {
    p_blank: f64,
    p_nonblank: f64,
    lm_state: Option<FusionState>,
    lm_score: f64,
}

impl Beam {
    fn acoustic(&self) -> f64 {
        log_add(self.p_blank, self.p_nonblank)
    }
}

fn weighted(lambda: f64, v: f64) -> f64 {
    if lambda == 0.0 {
        0.0
    } else {
        lambda * v
    }
}

/// CTC prefix beam search with optional shallow fusion.
///
/// Acoustic path sums are tracked separately for prefixes ending in blank and
/// non-blank; the LM increment for a prefix is added once, when the token
/// that creates it is emitted, and end-of-sentence is scored at the end.
/// Hypotheses come back ranked by total score, ties broken by token order.
pub fn beam_decode(
    scores: &ScoreMatrix,
    vocab: &Vocabulary,
    lm: Option<&LmFusion<'_>>,
    config: &DecodeConfig,
) -> Result<Vec<Hypothesis>> {
    config.validate()?;
    check_shape(scores, vocab)?;
    let blank = vocab.blank_index();
    let rank = |prefix: &[usize], b: &Beam| {
        b.acoustic() + weighted(config.lambda_lm, b.lm_score) + config.token_insertion_bonus * prefix.len() as f64
    };

    let mut beams: Vec<(Vec<usize>, Beam)> = vec![(
        Vec::new(),
        Beam {
            p_blank: 0.0,
            p_nonblank: f64::NEG_INFINITY,
            lm_state: lm.map(LmFusion::initial_state),
            lm_score: 0.0,
        },
    )];
    let mut candidates = Vec::with_capacity(scores.vocab_size());

    for t in 0..scores.frames() {
        let row = scores.row(t);
        candidates.clear();
        let floor = config.prune_log_threshold.map(|margin| {
            row.iter().copied().fold(f64::NEG_INFINITY, f64::max) - margin
        });
        candidates.extend((0..row.len()).filter(|&c| c != blank && floor.is_none_or(|f| row[c] >= f)));

        let mut next: HashMap<Vec<usize>, Beam> = HashMap::with_capacity(beams.len() * (candidates.len() + 1));
        for (prefix, beam) in &beams {
            let total = beam.acoustic();
            let stay = next.entry(prefix.clone()).or_insert_with(|| Beam {
                p_blank: f64::NEG_INFINITY,
                p_nonblank: f64::NEG_INFINITY,
                lm_state: beam.lm_state.clone(),
                lm_score: beam.lm_score,
            });
            stay.p_blank = log_add(stay.p_blank, total + row[blank]);
            let last = prefix.last().copied();
            if let Some(l) = last {
                if candidates.contains(&l) {
                    stay.p_nonblank = log_add(stay.p_nonblank, beam.p_nonblank + row[l]);
                }
            }
            for &c in &candidates {
                let mass = if Some(c) == last { beam.p_blank } else { total } + row[c];
                if mass == f64::NEG_INFINITY {
                    continue;
                }
                let mut extended = prefix.clone();
                extended.push(c);
                let entry = match next.get_mut(&extended) {
                    Some(e) => e,
                    None => {
                        let (lm_state, lm_score) = match (lm, &beam.lm_state) {
                            (Some(f), Some(state)) => {
                                let (inc, s) = f.advance(state, c)?;
                                (Some(s), beam.lm_score + inc)
                            }
                            _ => (None, 0.0),
                        };
                        next.entry(extended).or_insert(Beam {
                            p_blank: f64::NEG_INFINITY,
                            p_nonblank: f64::NEG_INFINITY,
                            lm_state,
                            lm_score,
                        })
                    }
                };
                entry.p_nonblank = log_add(entry.p_nonblank, mass);
            }
        }

        let mut ranked: Vec<(f64, Vec<usize>, Beam)> =
            next.into_iter().map(|(p, b)| (rank(&p, &b), p, b)).collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(&b.1)));
        ranked.truncate(config.beam_size);
        beams = ranked.into_iter().map(|(_, p, b)| (p, b)).collect();
    }

    let mut hyps = beams
        .into_iter()
        .map(|(prefix, beam)| {
            let lm_score = match (lm, &beam.lm_state) {
                (Some(f), Some(state)) => beam.lm_score + f.finish(state)?,
                _ => 0.0,
            };
            let acoustic = beam.acoustic();
            let bonus = config.token_insertion_bonus * prefix.len() as f64;
            Ok(Hypothesis {
                tokens: prefix,
                acoustic_score: acoustic,
                ilm_score: 0.0,
                lm_score,
                bonus_score: bonus,
                total_score: acoustic + weighted(config.lambda_lm, lm_score) + bonus,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    hyps.sort_by(|a, b| {
        b.total_score
            .total_cmp(&a.total_score)
            .then_with(|| a.tokens.cmp(&b.tokens))
    });
    Ok(hyps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ngram::{parse_arpa, NGramModel};
    use crate::numeric::{log_softmax, log_sum_exp_unchecked};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeMap;

    fn vocab(n: usize) -> Vocabulary {
        let mut toks = vec!["<blank>".to_string()];
        toks.extend(["a", "b", "c", "d", "e"].iter().take(n - 1).map(|s| s.to_string()));
        Vocabulary::new(toks, 0, None).unwrap()
    }

    fn random_scores(rng: &mut ChaCha8Rng, t: usize, n: usize) -> ScoreMatrix {
        let rows: Vec<Vec<f64>> = (0..t)
            .map(|_| log_softmax(&(0..n).map(|_| rng.gen_range(-3.0..3.0)).collect::<Vec<_>>()))
            .collect();
        ScoreMatrix::from_rows(&rows).unwrap()
    }

    fn token_lm() -> NGramModel {
        let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/tokens.arpa")).unwrap();
        parse_arpa(text.as_bytes()).unwrap()
    }

    /// Every alignment path, summed per collapsed label.
    fn enumerate(scores: &ScoreMatrix, blank: usize) -> BTreeMap<Vec<usize>, f64> {
        let (t_len, n) = (scores.frames(), scores.vocab_size());
        let mut sums: BTreeMap<Vec<usize>, Vec<f64>> = BTreeMap::new();
        for code in 0..n.pow(t_len as u32) {
            let mut c = code;
            let mut path = Vec::with_capacity(t_len);
            let mut s = 0.0;
            for t in 0..t_len {
                path.push(c % n);
                s += scores.get(t, c % n);
                c /= n;
            }
            let mut label = Vec::new();
            let mut prev = None;
            for &p in &path {
                if Some(p) != prev && p != blank {
                    label.push(p);
                }
                prev = Some(p);
            }
            sums.entry(label).or_default().push(s);
        }
        sums.into_iter().map(|(k, v)| (k, log_sum_exp_unchecked(&v))).collect()
    }

    #[test]
    fn greedy_examples() {
        let v = vocab(3);
        let s = ScoreMatrix::from_rows(&[
            vec![-2.0, -0.1, -3.0],
            vec![-2.0, -0.1, -3.0],
            vec![-0.1, -2.0, -3.0],
        ])
        .unwrap();
        assert_eq!(greedy_decode(&s, &v).unwrap().tokens, vec![1]);
        let blank = ScoreMatrix::from_rows(&vec![vec![-0.1, -2.0, -3.0]; 4]).unwrap();
        assert!(greedy_decode(&blank, &v).unwrap().tokens.is_empty());
        let tie = ScoreMatrix::from_rows(&[vec![-1.0, -0.5, -0.5]]).unwrap();
        assert_eq!(greedy_decode(&tie, &v).unwrap().tokens, vec![1]);
    }

    #[test]
    fn greedy_matches_two_line_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let v = vocab(6);
        for _ in 0..20 {
            let s = random_scores(&mut rng, 10, 6);
            let path: Vec<usize> = (0..10)
                .map(|t| (0..6).fold(0, |b, i| if s.get(t, i) > s.get(t, b) { i } else { b }))
                .collect();
            let expect = crate::ctc::collapse_ctc(&path, 0, 6).unwrap();
            assert_eq!(greedy_decode(&s, &v).unwrap().tokens, expect);
        }
    }

    #[test]
    fn beam_one_equals_greedy_on_peaky_scores() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let v = vocab(5);
        let cfg = DecodeConfig { beam_size: 1, ..Default::default() };
        for _ in 0..50 {
            let t_len = rng.gen_range(1..12);
            let rows: Vec<Vec<f64>> = (0..t_len)
                .map(|_| {
                    let top = rng.gen_range(0..5);
                    let mut logits: Vec<f64> = (0..5).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    logits[top] += 8.0;
                    log_softmax(&logits)
                })
                .collect();
            let s = ScoreMatrix::from_rows(&rows).unwrap();
            let beam = beam_decode(&s, &v, None, &cfg).unwrap();
            assert_eq!(beam[0].tokens, greedy_decode(&s, &v).unwrap().tokens);
        }
    }

    #[test]
    fn exhaustive_oracle_three_by_three() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let v = vocab(3);
        let cfg = DecodeConfig { beam_size: 27, ..Default::default() };
        for _ in 0..20 {
            let s = random_scores(&mut rng, 3, 3);
            let oracle = enumerate(&s, 0);
            let (best_label, best) = oracle
                .iter()
                .max_by(|a, b| a.1.total_cmp(b.1).then_with(|| b.0.cmp(a.0)))
                .unwrap();
            let hyps = beam_decode(&s, &v, None, &cfg).unwrap();
            assert_eq!(&hyps[0].tokens, best_label);
            assert_abs_diff_eq!(hyps[0].total_score, *best, epsilon = 1e-9);
            // With no pruning every label's beam score is its exact path sum.
            for h in &hyps {
                assert_abs_diff_eq!(h.acoustic_score, oracle[&h.tokens], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn fused_scores_match_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(30);
        let lm = token_lm();
        let v = vocab(4);
        let fusion = LmFusion::new(&lm, &v, FusionUnit::Token).unwrap();
        let cfg = DecodeConfig { lambda_lm: 2.0, beam_size: 64, ..Default::default() };
        for _ in 0..20 {
            let s = random_scores(&mut rng, 3, 4);
            let fused: Vec<(Vec<usize>, f64)> = enumerate(&s, 0)
                .into_iter()
                .map(|(label, a)| {
                    let l = fusion.score_tokens(&label).unwrap();
                    (label, a + 2.0 * l)
                })
                .collect();
            let (best_label, best) = fused
                .iter()
                .max_by(|a, b| a.1.total_cmp(&b.1).then_with(|| b.0.cmp(&a.0)))
                .unwrap();
            let hyps = beam_decode(&s, &v, Some(&fusion), &cfg).unwrap();
            assert_eq!(&hyps[0].tokens, best_label);
            assert_abs_diff_eq!(hyps[0].total_score, *best, epsilon = 1e-9);
            for h in &hyps {
                assert_abs_diff_eq!(h.total_score, h.recompose(0.0, 2.0), epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn lm_breaks_acoustic_ties() {
        let lm = token_lm();
        let v = vocab(4);
        let fusion = LmFusion::new(&lm, &v, FusionUnit::Token).unwrap();
        // Two uniform frames: each two-token label has one path, so the LM decides.
        // log10 P(b c) = (-0.079181 - 0.522879) - 0.301030 - 0.301030 beats every other pair.
        let s = ScoreMatrix::from_rows(&vec![vec![0.25f64.ln(); 4]; 2]).unwrap();
        let cfg = DecodeConfig { lambda_lm: 1.0, ..Default::default() };
        let hyps = beam_decode(&s, &v, Some(&fusion), &cfg).unwrap();
        let two: Vec<_> = hyps.iter().filter(|h| h.tokens.len() == 2).collect();
        assert_eq!(two[0].tokens, vec![2, 3]);
    }

    #[test]
    fn zero_lm_weight_matches_no_lm() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let lm = token_lm();
        let v = vocab(4);
        let fusion = LmFusion::new(&lm, &v, FusionUnit::Token).unwrap();
        let cfg = DecodeConfig { lambda_lm: 0.0, beam_size: 8, ..Default::default() };
        for _ in 0..10 {
            let s = random_scores(&mut rng, 7, 4);
            let a: Vec<_> = beam_decode(&s, &v, Some(&fusion), &cfg).unwrap().into_iter().map(|h| (h.tokens, h.total_score)).collect();
            let b: Vec<_> = beam_decode(&s, &v, None, &cfg).unwrap().into_iter().map(|h| (h.tokens, h.total_score)).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn pruning_and_bonus() {
        let v = vocab(3);
        let s = ScoreMatrix::from_rows(&[vec![-0.01, -5.0, -9.0], vec![-0.01, -5.0, -9.0]]).unwrap();
        let cfg = DecodeConfig { prune_log_threshold: Some(1.0), ..Default::default() };
        let hyps = beam_decode(&s, &v, None, &cfg).unwrap();
        assert_eq!(hyps.len(), 1);
        assert!(hyps[0].tokens.is_empty());
        let cfg = DecodeConfig { token_insertion_bonus: 10.0, ..Default::default() };
        let hyps = beam_decode(&s, &v, None, &cfg).unwrap();
        assert_eq!(hyps[0].tokens.len(), 2);
        assert_abs_diff_eq!(hyps[0].total_score, hyps[0].recompose(0.0, 1.0), epsilon = 1e-12);
    }

    #[test]
    fn config_and_shape_errors() {
        let v = vocab(3);
        let s = ScoreMatrix::from_rows(&[vec![-1.0; 4]]).unwrap();
        assert!(matches!(beam_decode(&s, &v, None, &DecodeConfig::default()), Err(Error::Config(_))));
        let s = ScoreMatrix::from_rows(&[vec![-1.0; 3]]).unwrap();
        let bad = DecodeConfig { beam_size: 0, ..Default::default() };
        assert!(beam_decode(&s, &v, None, &bad).is_err());
    }
}
