use std::collections::HashMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{beam_decode, DecodeConfig};
use crate::acoustic::{score_batch, AcousticScorer, MaskKey, ScoreRequest};
use crate::ctc::label_log_score;
use crate::error::{Error, Result};
use crate::hypothesis::Hypothesis;
use crate::ilme::{run_ilme, Diagnostics, IlmConfig};
use crate::masking::MaskPlan;
use crate::matrix::FeatureSequence;
use crate::ngram::{LmFusion, NGramModel};
use crate::vocab::Vocabulary;

/// Which score matrix is decoded and whether an external LM is fused.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecodeMode {
    /// Raw posteriors, no LM.
    #[serde(rename = "baseline")]
    Baseline,
    /// Raw posteriors with shallow fusion.
    #[serde(rename = "sf")]
    Sf,
    /// ILM-adjusted scores, no LM.
    #[serde(rename = "ilme")]
    Ilme,
    /// ILM-adjusted scores with shallow fusion.
    #[serde(rename = "ilme+sf")]
    IlmeSf,
}

impl DecodeMode {
    pub fn uses_lm(self) -> bool {
        matches!(self, DecodeMode::Sf | DecodeMode::IlmeSf)
    }

    pub fn uses_ilme(self) -> bool {
        matches!(self, DecodeMode::Ilme | DecodeMode::IlmeSf)
    }
}

impl fmt::Display for DecodeMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DecodeMode::Baseline => "baseline",
            DecodeMode::Sf => "sf",
            DecodeMode::Ilme => "ilme",
            DecodeMode::IlmeSf => "ilme+sf",
        })
    }
}

impl FromStr for DecodeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" => Ok(DecodeMode::Baseline),
            "sf" => Ok(DecodeMode::Sf),
            "ilme" => Ok(DecodeMode::Ilme),
            "ilme+sf" => Ok(DecodeMode::IlmeSf),
            other => Err(Error::Config(format!(
                "unknown mode {other:?}, expected baseline, sf, ilme or ilme+sf"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MaskStrategy {
    Equal(usize),
    /// Per-utterance interior boundaries; missing utterances get one mask.
    Segments(HashMap<String, Vec<usize>>),
}

impl MaskStrategy {
    pub fn plan(&self, utterance: &str, frames: usize) -> Result<MaskPlan> {
        match self {
            MaskStrategy::Equal(k) => MaskPlan::equal(frames, *k),
            MaskStrategy::Segments(map) => {
                MaskPlan::segments(frames, map.get(utterance).map_or(&[][..], Vec::as_slice))
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct CorpusUtterance {
    pub id: String,
    /// Absent for file-backed corpora, where the scorer resolves by id.
    pub features: Option<FeatureSequence>,
    pub frames: usize,
}

/// Everything shared by the utterances of one decoding run.
pub struct CorpusJob<'a> {
    pub scorer: &'a dyn AcousticScorer,
    pub vocab: &'a Vocabulary,
    pub lm: Option<&'a NGramModel>,
    pub mode: DecodeMode,
    pub ilm: IlmConfig,
    pub decode: DecodeConfig,
    pub masking: MaskStrategy,
    pub workers: usize,
}

#[derive(Debug, Clone)]
pub struct UtteranceDecode {
    pub hypotheses: Vec<Hypothesis>,
    pub diagnostics: Option<Diagnostics>,
}

#[derive(Debug, Clone)]
pub struct UtteranceResult {
    pub id: String,
    pub outcome: std::result::Result<UtteranceDecode, String>,
}

fn decode_one(
    job: &CorpusJob<'_>,
    fusion: Option<&LmFusion<'_>>,
    utt: &CorpusUtterance,
) -> Result<UtteranceDecode> {
    let blank = job.vocab.blank_index();
    if !job.mode.uses_ilme() {
        let req = ScoreRequest {
            utterance: &utt.id,
            mask: MaskKey::Original,
            features: utt.features.as_ref(),
        };
        let original = score_batch(job.scorer, &[req])?.remove(0);
        let hypotheses = beam_decode(&original.to_scores(), job.vocab, fusion, &job.decode)?;
        return Ok(UtteranceDecode {
            hypotheses,
            diagnostics: None,
        });
    }

    let plan = job.masking.plan(&utt.id, utt.frames)?;
    let out = run_ilme(job.scorer, &utt.id, utt.features.as_ref(), &plan, &job.ilm, blank)?;
    let mut hypotheses = beam_decode(&out.scores, job.vocab, fusion, &job.decode)?;
    let lambda = job.ilm.lambda_ilm;
    if lambda != 0.0 {
        // Re-express the adjusted path sum as raw acoustic minus λ_I·ILM.
        let raw = out.original.to_scores();
        for h in &mut hypotheses {
            let adjusted = h.acoustic_score;
            let acoustic = label_log_score(&raw, &h.tokens, blank);
            h.acoustic_score = acoustic;
            h.ilm_score = (acoustic - adjusted) / lambda;
        }
    }
    Ok(UtteranceDecode {
        hypotheses,
        diagnostics: Some(out.diagnostics),
    })
}

/// Decodes every utterance on a pool of `job.workers` threads.
///
/// Results come back in input order whatever the worker count. Utterance
/// failures are captured per result; only run-level misconfiguration fails
/// the whole call.
pub fn decode_corpus(job: &CorpusJob<'_>, utterances: &[CorpusUtterance]) -> Result<Vec<UtteranceResult>> {
    job.decode.validate()?;
    if job.mode.uses_ilme() {
        job.ilm.validate()?;
    }
    if job.scorer.vocab_size() != job.vocab.len() {
        return Err(Error::Config(format!(
            "scorer emits {} tokens, vocabulary has {}",
            job.scorer.vocab_size(),
            job.vocab.len()
        )));
    }
    let fusion = if job.mode.uses_lm() {
        let lm = job
            .lm
            .ok_or_else(|| Error::Config(format!("mode {} needs a language model", job.mode)))?;
        Some(LmFusion::new(lm, job.vocab, job.decode.fusion_unit)?)
    } else {
        None
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(job.workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| {
        utterances
            .par_iter()
            .map(|utt| UtteranceResult {
                id: utt.id.clone(),
                outcome: decode_one(job, fusion.as_ref(), utt).map_err(|e| e.to_string()),
            })
            .collect()
    }))
}

/// `utterance-id<TAB>text` for each successfully decoded utterance.
pub fn render_transcripts(results: &[UtteranceResult], vocab: &Vocabulary) -> String {
    let mut out = String::new();
    for r in results {
        if let Ok(d) = &r.outcome {
            let text = d
                .hypotheses
                .first()
                .map(|h| vocab.detokenize(&h.tokens))
                .unwrap_or_default();
            let _ = writeln!(out, "{}\t{text}", r.id);
        }
    }
    out
}

/// `utterance-id<TAB>rank<TAB>acoustic<TAB>ilm<TAB>lm<TAB>text`, scores to 6 decimals.
pub fn render_nbest(results: &[UtteranceResult], vocab: &Vocabulary, n: usize) -> String {
    let mut out = String::new();
    for r in results {
        if let Ok(d) = &r.outcome {
            for (rank, h) in d.hypotheses.iter().take(n).enumerate() {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{:.6}\t{:.6}\t{:.6}\t{}",
                    r.id,
                    rank + 1,
                    h.acoustic_score,
                    h.ilm_score,
                    h.lm_score,
                    vocab.detokenize(&h.tokens)
                );
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mode_strings() {
        for m in [DecodeMode::Baseline, DecodeMode::Sf, DecodeMode::Ilme, DecodeMode::IlmeSf] {
            assert_eq!(m.to_string().parse::<DecodeMode>().unwrap(), m);
        }
        assert!("ilme+lm".parse::<DecodeMode>().is_err());
    }

    #[test]
    fn segment_strategy_falls_back_to_one_mask() {
        let mut map = HashMap::new();
        map.insert("u1".to_string(), vec![2, 5]);
        let s = MaskStrategy::Segments(map);
        assert_eq!(s.plan("u1", 8).unwrap().len(), 3);
        assert_eq!(s.plan("u2", 8).unwrap().len(), 1);
        assert!(s.plan("u1", 4).is_err());
    }
}
