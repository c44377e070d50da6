use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{AcousticScorer, ScoreRequest};
use crate::error::{Error, Result};
use crate::matrix::{FeatureSequence, LogPosteriorMatrix};
use crate::numeric::log_softmax_in_place;

const CENTER_GAIN: f64 = 5.0;
const CENTER_NOISE: f64 = 0.5;
const COUPLING: f64 = 1.5;

/// Deterministic 1-D convolutional "CTC model" with a finite receptive field.
///
/// Row `t` of the output depends only on input frames
/// `[t - context_radius, t + context_radius]`. The centre tap is a noisy
/// scaled identity so one-hot features are recognisable; the off-centre taps
/// are random, giving the cross-frame coupling that masking probes.
#[derive(Debug, Clone)]
pub struct ToyConvModel {
    seed: u64,
    feature_dim: usize,
    vocab_size: usize,
    context_radius: usize,
    // [tap][token][feature]
    taps: Vec<f64>,
    bias: Vec<f64>,
}

impl ToyConvModel {
    pub fn new(seed: u64, feature_dim: usize, vocab_size: usize, context_radius: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let width = 2 * context_radius + 1;
        let scale = 1.0 / (feature_dim as f64).sqrt();
        let mut taps = Vec::with_capacity(width * vocab_size * feature_dim);
        for tap in 0..width {
            for n in 0..vocab_size {
                for d in 0..feature_dim {
                    let u: f64 = rng.gen_range(-1.0..1.0);
                    let w = if tap == context_radius {
                        let diag = if n == d { CENTER_GAIN } else { 0.0 };
                        diag + CENTER_NOISE * scale * u
                    } else {
                        COUPLING * scale * u
                    };
                    taps.push(w);
                }
            }
        }
        let bias = (0..vocab_size).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Self {
            seed,
            feature_dim,
            vocab_size,
            context_radius,
            taps,
            bias,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn feature_dim(&self) -> usize {
        self.feature_dim
    }

    pub fn context_radius(&self) -> usize {
        self.context_radius
    }

    fn tap(&self, tap: usize, n: usize) -> &[f64] {
        let start = (tap * self.vocab_size + n) * self.feature_dim;
        &self.taps[start..start + self.feature_dim]
    }

    pub fn forward(&self, x: &FeatureSequence) -> Result<LogPosteriorMatrix> {
        if x.dim() != self.feature_dim {
            return Err(Error::usage(format!(
                "toy model expects feature dim {}, got {}",
                self.feature_dim,
                x.dim()
            )));
        }
        let t_len = x.frames();
        let r = self.context_radius as isize;
        let mut data = Vec::with_capacity(t_len * self.vocab_size);
        let mut logits = vec![0.0f64; self.vocab_size];
        for t in 0..t_len as isize {
            logits.copy_from_slice(&self.bias);
            for offset in -r..=r {
                let src = t + offset;
                if src < 0 || src >= t_len as isize {
                    continue;
                }
                let frame = x.frame(src as usize);
                let tap = (offset + r) as usize;
                for (n, logit) in logits.iter_mut().enumerate() {
                    let w = self.tap(tap, n);
                    let dot: f64 = w.iter().zip(frame).map(|(w, &f)| w * f64::from(f)).sum();
                    *logit += dot;
                }
            }
            log_softmax_in_place(&mut logits);
            data.extend(logits.iter().map(|&v| v as f32));
        }
        LogPosteriorMatrix::new(t_len, self.vocab_size, data)
    }
}

impl AcousticScorer for ToyConvModel {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn score(&self, batch: &[ScoreRequest<'_>]) -> Result<Vec<LogPosteriorMatrix>> {
        batch
            .iter()
            .enumerate()
            .map(|(index, req)| {
                let x = req.features.ok_or_else(|| Error::Scoring {
                    index,
                    message: "toy model needs features".into(),
                })?;
                self.forward(x).map_err(|e| Error::Scoring {
                    index,
                    message: e.to_string(),
                })
            })
            .collect()
    }
}
