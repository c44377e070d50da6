//! Internal language model estimation for CTC via iterative input masking.
//!
//! For every mask `k` the masked re-scoring is compared with the original
//! posterior frame by frame. The largest absolute log-posterior change at a
//! frame, normalized by its maximum over the utterance, decides whether the
//! masked distribution at that frame reflects the model's bias (`δ̂ > γ`).
//! Selected masked rows are summed and log-softmaxed into the ILM estimate,
//! which is then subtracted (weighted by `λ_I`) from frames whose original
//! blank probability is below `β`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::acoustic::{score_batch, AcousticScorer, MaskKey, ScoreRequest};
use crate::error::{Error, Result};
use crate::masking::{apply_mask, MaskPlan};
use crate::matrix::{FeatureSequence, LogPosteriorMatrix, ScoreMatrix};
use crate::numeric::log_sum_exp_unchecked;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IlmConfig {
    /// Normalized-delta threshold; a mask contributes at frame t iff δ̂ > γ.
    pub gamma: f64,
    /// Blank-probability gate; frames with P(blank) ≥ β are left untouched.
    pub beta: f64,
    /// ILM weight λ_I.
    pub lambda_ilm: f64,
    /// Score original and masked inputs as one batch (otherwise one at a time).
    pub batched: bool,
}

impl Default for IlmConfig {
    fn default() -> Self {
        Self {
            gamma: 0.25,
            beta: 0.9,
            lambda_ilm: 0.1,
            batched: true,
        }
    }
}

impl IlmConfig {
    pub fn validate(&self) -> Result<()> {
        let unit = 0.0..=1.0;
        if !unit.contains(&self.gamma) {
            return Err(Error::Config(format!("gamma must be in [0, 1], got {}", self.gamma)));
        }
        if !unit.contains(&self.beta) {
            return Err(Error::Config(format!("beta must be in [0, 1], got {}", self.beta)));
        }
        if !(self.lambda_ilm >= 0.0 && self.lambda_ilm.is_finite()) {
            return Err(Error::Config(format!(
                "lambda_ilm must be finite and >= 0, got {}",
                self.lambda_ilm
            )));
        }
        Ok(())
    }
}

#[inline]
fn abs_diff(a: f64, b: f64) -> f64 {
    // Equal infinities differ by nothing.
    if a == b {
        0.0
    } else {
        (a - b).abs()
    }
}

/// Per-frame `max_n |masked[t][n] − original[t][n]|`.
pub fn posterior_deltas(
    original: &LogPosteriorMatrix,
    masked: &LogPosteriorMatrix,
) -> Result<Vec<f64>> {
    if !original.same_shape(masked) {
        return Err(Error::usage(format!(
            "shape mismatch: original {}x{}, masked {}x{}",
            original.frames(),
            original.vocab_size(),
            masked.frames(),
            masked.vocab_size()
        )));
    }
    Ok((0..original.frames())
        .map(|t| {
            original
                .row(t)
                .iter()
                .zip(masked.row(t))
                .map(|(&a, &b)| abs_diff(f64::from(a), f64::from(b)))
                .fold(0.0, f64::max)
        })
        .collect())
}

/// Divides by the maximum over frames; an all-zero vector stays all-zero.
pub fn normalize_deltas(deltas: &[f64]) -> Vec<f64> {
    let max = deltas.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return vec![0.0; deltas.len()];
    }
    if max.is_infinite() {
        return deltas
            .iter()
            .map(|&d| if d.is_infinite() { 1.0 } else { 0.0 })
            .collect();
    }
    deltas.iter().map(|&d| d / max).collect()
}

/// ILM pseudo log-likelihood rows with per-frame applicability.
#[derive(Debug, Clone, PartialEq)]
pub struct IlmEstimate {
    vocab_size: usize,
    rows: Vec<f64>,
    contributing: Vec<usize>,
    applied: Vec<bool>,
    normalized_deltas: Vec<Vec<f64>>,
}

impl IlmEstimate {
    pub fn frames(&self) -> usize {
        self.applied.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    /// The ILM log-distribution at frame `t`, or `None` when no mask contributed.
    pub fn row(&self, t: usize) -> Option<&[f64]> {
        self.applied[t].then(|| &self.rows[t * self.vocab_size..(t + 1) * self.vocab_size])
    }

    pub fn contributing_mask_counts(&self) -> &[usize] {
        &self.contributing
    }

    pub fn applied(&self) -> &[bool] {
        &self.applied
    }

    /// `δ̂^k` per mask, `[k][t]`.
    pub fn normalized_deltas(&self) -> &[Vec<f64>] {
        &self.normalized_deltas
    }
}

/// Sums, per frame, the masked log-posteriors whose normalized delta exceeds
/// `γ`, then log-softmaxes the sum.
pub fn estimate_ilm(
    original: &LogPosteriorMatrix,
    masked_set: &[LogPosteriorMatrix],
    plan: &MaskPlan,
    config: &IlmConfig,
) -> Result<IlmEstimate> {
    if masked_set.len() != plan.len() {
        return Err(Error::usage(format!(
            "{} masked matrices for a plan of K={}",
            masked_set.len(),
            plan.len()
        )));
    }
    if original.frames() != plan.frames() {
        return Err(Error::usage(format!(
            "plan covers {} frames, posterior has {}",
            plan.frames(),
            original.frames()
        )));
    }
    let normalized_deltas = masked_set
        .iter()
        .map(|m| posterior_deltas(original, m).map(|d| normalize_deltas(&d)))
        .collect::<Result<Vec<_>>>()?;

    let (t_len, n) = (original.frames(), original.vocab_size());
    let mut rows = vec![f64::NAN; t_len * n];
    let mut contributing = vec![0usize; t_len];
    let mut applied = vec![false; t_len];
    let mut acc = vec![0.0f64; n];
    for t in 0..t_len {
        acc.fill(0.0);
        let mut count = 0;
        for (k, masked) in masked_set.iter().enumerate() {
            if normalized_deltas[k][t] > config.gamma {
                count += 1;
                for (a, &v) in acc.iter_mut().zip(masked.row(t)) {
                    *a += f64::from(v);
                }
            }
        }
        contributing[t] = count;
        if count == 0 {
            continue;
        }
        let lse = log_sum_exp_unchecked(&acc);
        if !lse.is_finite() {
            continue;
        }
        for (out, &a) in rows[t * n..(t + 1) * n].iter_mut().zip(&acc) {
            *out = a - lse;
        }
        applied[t] = true;
    }
    Ok(IlmEstimate {
        vocab_size: n,
        rows,
        contributing,
        applied,
        normalized_deltas,
    })
}

/// True when frame `t` receives the ILM subtraction.
fn gate_open(original: &LogPosteriorMatrix, ilm: &IlmEstimate, beta: f64, blank: usize, t: usize) -> bool {
    ilm.applied[t] && original.get(t, blank).exp() < beta
}

/// `original − λ_I·ILM` on gated frames; other frames are copied bit-exactly.
/// Rows are left unnormalized.
pub fn adjust_scores(
    original: &LogPosteriorMatrix,
    ilm: &IlmEstimate,
    config: &IlmConfig,
    blank_index: usize,
) -> Result<ScoreMatrix> {
    if original.frames() != ilm.frames() || original.vocab_size() != ilm.vocab_size() {
        return Err(Error::usage("ILM estimate and posterior shapes differ"));
    }
    if blank_index >= original.vocab_size() {
        return Err(Error::usage(format!("blank index {blank_index} out of range")));
    }
    let mut scores = original.to_scores().as_slice().to_vec();
    if config.lambda_ilm == 0.0 {
        return ScoreMatrix::new(original.frames(), original.vocab_size(), scores);
    }
    let n = original.vocab_size();
    for t in 0..original.frames() {
        if !gate_open(original, ilm, config.beta, blank_index, t) {
            continue;
        }
        let ilm_row = ilm.row(t).expect("applied frame has a row");
        for (s, &l) in scores[t * n..(t + 1) * n].iter_mut().zip(ilm_row) {
            *s -= config.lambda_ilm * l;
        }
    }
    ScoreMatrix::new(original.frames(), n, scores)
}

/// Per-frame observability of one ILME run.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub blank_probabilities: Vec<f64>,
    /// Whether the ILM subtraction was performed at each frame.
    pub adjusted: Vec<bool>,
    pub contributing_mask_counts: Vec<usize>,
    /// `[k][t]`
    pub normalized_deltas: Vec<Vec<f64>>,
}

impl Diagnostics {
    fn new(original: &LogPosteriorMatrix, ilm: &IlmEstimate, config: &IlmConfig, blank: usize) -> Self {
        let t_len = original.frames();
        Self {
            blank_probabilities: (0..t_len).map(|t| original.get(t, blank).exp()).collect(),
            adjusted: (0..t_len)
                .map(|t| config.lambda_ilm != 0.0 && gate_open(original, ilm, config.beta, blank, t))
                .collect(),
            contributing_mask_counts: ilm.contributing.clone(),
            normalized_deltas: ilm.normalized_deltas.clone(),
        }
    }

    /// One tab-separated line per frame: index, blank probability, applied
    /// flag, contributing count, comma-separated `δ̂` per mask.
    pub fn render(&self) -> String {
        let mut out = String::from("# frame\tblank_prob\tapplied\tcontributing\tdelta_hat\n");
        for t in 0..self.adjusted.len() {
            let deltas = self
                .normalized_deltas
                .iter()
                .map(|d| format!("{:.6}", d[t]))
                .collect::<Vec<_>>()
                .join(",");
            let _ = writeln!(
                out,
                "{t}\t{:.6}\t{}\t{}\t{deltas}",
                self.blank_probabilities[t],
                u8::from(self.adjusted[t]),
                self.contributing_mask_counts[t],
            );
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct IlmeOutput {
    pub original: LogPosteriorMatrix,
    pub scores: ScoreMatrix,
    pub estimate: IlmEstimate,
    pub diagnostics: Diagnostics,
}

/// Scores the original and every masked variant, estimates the ILM and
/// returns the adjusted score matrix.
///
/// The original is always the first element of the scoring batch. Without
/// `features` the scorer must resolve requests by `(utterance, mask)`.
pub fn run_ilme(
    scorer: &dyn AcousticScorer,
    utterance: &str,
    features: Option<&FeatureSequence>,
    plan: &MaskPlan,
    config: &IlmConfig,
    blank_index: usize,
) -> Result<IlmeOutput> {
    config.validate()?;
    let masked_features = match features {
        Some(x) => (0..plan.len())
            .map(|k| apply_mask(x, plan, k).map(Some))
            .collect::<Result<Vec<_>>>()?,
        None => vec![None; plan.len()],
    };
    let mut batch = Vec::with_capacity(plan.len() + 1);
    batch.push(ScoreRequest {
        utterance,
        mask: MaskKey::Original,
        features,
    });
    for (k, x) in masked_features.iter().enumerate() {
        batch.push(ScoreRequest {
            utterance,
            mask: MaskKey::Masked(k),
            features: x.as_ref(),
        });
    }
    let mut scored = if config.batched {
        score_batch(scorer, &batch)?
    } else {
        let mut out = Vec::with_capacity(batch.len());
        for (i, req) in batch.iter().enumerate() {
            let m = score_batch(scorer, std::slice::from_ref(req)).map_err(|e| match e {
                Error::Scoring { message, .. } => Error::Scoring { index: i, message },
                other => other,
            })?;
            out.extend(m);
        }
        out
    };
    let masked = scored.split_off(1);
    let original = scored.pop().expect("original scored");
    if original.frames() != plan.frames() {
        return Err(Error::usage(format!(
            "plan covers {} frames, posterior has {}",
            plan.frames(),
            original.frames()
        )));
    }
    let estimate = estimate_ilm(&original, &masked, plan, config)?;
    let scores = adjust_scores(&original, &estimate, config, blank_index)?;
    let diagnostics = Diagnostics::new(&original, &estimate, config, blank_index);
    Ok(IlmeOutput {
        original,
        scores,
        estimate,
        diagnostics,
    })
}
