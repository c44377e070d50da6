//! Acoustic scorers: anything mapping (possibly masked) features to CTC log-posteriors.

mod file;
mod toy;

use std::fmt;
use std::str::FromStr;

pub use file::{FileScorer, ManifestEntry};
pub use toy::ToyConvModel;

use crate::error::{Error, Result};
use crate::matrix::{FeatureSequence, LogPosteriorMatrix};

/// Which variant of an utterance a request scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MaskKey {
    Original,
    /// Partition `k` (0-based) zeroed.
    Masked(usize),
}

impl fmt::Display for MaskKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MaskKey::Original => f.write_str("orig"),
            MaskKey::Masked(k) => write!(f, "{k}"),
        }
    }
}

impl FromStr for MaskKey {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "orig" {
            return Ok(MaskKey::Original);
        }
        s.parse::<usize>()
            .map(MaskKey::Masked)
            .map_err(|_| Error::usage(format!("invalid mask id {s:?}, expected \"orig\" or an index")))
    }
}

/// One element of a scoring batch.
///
/// File-backed scorers resolve by `(utterance, mask)`; feature-based scorers
/// read `features`, which must then be present.
#[derive(Debug, Clone, Copy)]
pub struct ScoreRequest<'a> {
    pub utterance: &'a str,
    pub mask: MaskKey,
    pub features: Option<&'a FeatureSequence>,
}

impl<'a> ScoreRequest<'a> {
    pub fn features(features: &'a FeatureSequence) -> Self {
        Self {
            utterance: "",
            mask: MaskKey::Original,
            features: Some(features),
        }
    }
}

/// Stand-in for a CTC acoustic model.
///
/// Implementations must be deterministic: an identical batch yields
/// bit-identical output.
pub trait AcousticScorer: Send + Sync {
    fn vocab_size(&self) -> usize;

    fn score(&self, batch: &[ScoreRequest<'_>]) -> Result<Vec<LogPosteriorMatrix>>;
}

/// Scores a batch, checking the shape contract on both sides of the scorer.
pub fn score_batch(
    scorer: &dyn AcousticScorer,
    batch: &[ScoreRequest<'_>],
) -> Result<Vec<LogPosteriorMatrix>> {
    if batch.is_empty() {
        return Err(Error::usage("empty scoring batch"));
    }
    let mut dim = None;
    for (i, req) in batch.iter().enumerate() {
        if let Some(x) = req.features {
            match dim {
                None => dim = Some(x.dim()),
                Some(d) if d != x.dim() => {
                    return Err(Error::Scoring {
                        index: i,
                        message: format!("feature dimension {} differs from {d}", x.dim()),
                    })
                }
                _ => {}
            }
        }
    }
    let out = scorer.score(batch)?;
    if out.len() != batch.len() {
        return Err(Error::Scoring {
            index: out.len().min(batch.len()),
            message: format!("scorer returned {} outputs for {} inputs", out.len(), batch.len()),
        });
    }
    for (i, (req, m)) in batch.iter().zip(&out).enumerate() {
        if let Some(x) = req.features {
            if x.frames() != m.frames() {
                return Err(Error::Scoring {
                    index: i,
                    message: format!("{} input frames but {} output rows", x.frames(), m.frames()),
                });
            }
        }
        if m.vocab_size() != scorer.vocab_size() {
            return Err(Error::Scoring {
                index: i,
                message: format!(
                    "output has {} columns, scorer vocabulary is {}",
                    m.vocab_size(),
                    scorer.vocab_size()
                ),
            });
        }
    }
    Ok(out)
}

/// Convenience wrapper for feature-only batches.
pub fn score_features(
    scorer: &dyn AcousticScorer,
    inputs: &[FeatureSequence],
) -> Result<Vec<LogPosteriorMatrix>> {
    let batch: Vec<_> = inputs.iter().map(ScoreRequest::features).collect();
    score_batch(scorer, &batch)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mask_key_round_trip() {
        assert_eq!("orig".parse::<MaskKey>().unwrap(), MaskKey::Original);
        assert_eq!("3".parse::<MaskKey>().unwrap(), MaskKey::Masked(3));
        assert!("x".parse::<MaskKey>().is_err());
        assert_eq!(MaskKey::Masked(4).to_string(), "4");
    }

    #[test]
    fn batch_rejects_mixed_dimensions() {
        let model = ToyConvModel::new(1, 3, 4, 1);
        let a = FeatureSequence::zeros(4, 3).unwrap();
        let b = FeatureSequence::zeros(4, 2).unwrap();
        let err = score_features(&model, &[a, b]).unwrap_err();
        assert!(matches!(err, Error::Scoring { index: 1, .. }), "{err}");
        assert!(score_features(&model, &[]).is_err());
    }
}
