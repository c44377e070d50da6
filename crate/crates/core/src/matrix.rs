//! Dense frame-major matrices: log-posteriors, decoder scores, acoustic features.

use crate::error::{Error, Result};
use crate::numeric::log_sum_exp_unchecked;

/// Maximum |logsumexp| tolerated for a row to count as normalized.
pub const ROW_NORMALIZATION_TOLERANCE: f64 = 1e-4;
/// Largest entry tolerated in a log-probability row (rounding slack above 0).
pub const MAX_LOG_PROB: f64 = 1e-6;

/// T×N per-frame log-probabilities over the token vocabulary.
///
/// Values are stored as `f32`, the on-disk precision of LPM files, so that
/// serialization round-trips bit-exactly. Readers widen to `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogPosteriorMatrix {
    frames: usize,
    vocab_size: usize,
    data: Vec<f32>,
    frame_duration: Option<f64>,
}

impl LogPosteriorMatrix {
    pub fn new(frames: usize, vocab_size: usize, data: Vec<f32>) -> Result<Self> {
        let m = Self {
            frames,
            vocab_size,
            data,
            frame_duration: None,
        };
        m.validate()?;
        Ok(m)
    }

    #[cfg(test)]
    pub(crate) fn new_unchecked(frames: usize, vocab_size: usize, data: Vec<f32>) -> Self {
        Self {
            frames,
            vocab_size,
            data,
            frame_duration: None,
        }
    }

    /// Builds from `f64` rows, rounding each entry to `f32`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let vocab_size = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * vocab_size);
        for (t, row) in rows.iter().enumerate() {
            if row.len() != vocab_size {
                return Err(Error::usage(format!(
                    "row {t} has {} entries, expected {vocab_size}",
                    row.len()
                )));
            }
            data.extend(row.iter().map(|&v| v as f32));
        }
        Self::new(rows.len(), vocab_size, data)
    }

    pub fn with_frame_duration(mut self, seconds: f64) -> Self {
        self.frame_duration = Some(seconds);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::usage("log-posterior matrix needs at least one frame"));
        }
        if self.vocab_size == 0 {
            return Err(Error::usage("log-posterior matrix needs at least one column"));
        }
        if self.data.len() != self.frames * self.vocab_size {
            return Err(Error::usage(format!(
                "expected {}x{} = {} values, got {}",
                self.frames,
                self.vocab_size,
                self.frames * self.vocab_size,
                self.data.len()
            )));
        }
        let mut buf = vec![0.0f64; self.vocab_size];
        for t in 0..self.frames {
            for (b, &v) in buf.iter_mut().zip(self.row(t)) {
                if v.is_nan() {
                    return Err(Error::usage(format!("row {t} contains NaN")));
                }
                if f64::from(v) > MAX_LOG_PROB {
                    return Err(Error::usage(format!(
                        "row {t} has positive log-probability {v}"
                    )));
                }
                *b = f64::from(v);
            }
            let lse = log_sum_exp_unchecked(&buf);
            if lse.is_nan() || lse.abs() > ROW_NORMALIZATION_TOLERANCE {
                return Err(Error::usage(format!(
                    "row {t} is not normalized: logsumexp = {lse}"
                )));
            }
        }
        Ok(())
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn frame_duration(&self) -> Option<f64> {
        self.frame_duration
    }

    pub fn row(&self, t: usize) -> &[f32] {
        &self.data[t * self.vocab_size..(t + 1) * self.vocab_size]
    }

    #[inline]
    pub fn get(&self, t: usize, n: usize) -> f64 {
        f64::from(self.data[t * self.vocab_size + n])
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    /// Exact widening into a decoder score matrix.
    pub fn to_scores(&self) -> ScoreMatrix {
        ScoreMatrix {
            frames: self.frames,
            vocab_size: self.vocab_size,
            data: self.data.iter().map(|&v| f64::from(v)).collect(),
        }
    }

    pub(crate) fn same_shape(&self, other: &LogPosteriorMatrix) -> bool {
        self.frames == other.frames && self.vocab_size == other.vocab_size
    }
}

/// Frame-major log-domain scores consumed by the decoders.
///
/// Unlike [`LogPosteriorMatrix`] rows need not be normalized: ILM-adjusted
/// scores are deliberately left unnormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    frames: usize,
    vocab_size: usize,
    data: Vec<f64>,
}

impl ScoreMatrix {
    pub fn new(frames: usize, vocab_size: usize, data: Vec<f64>) -> Result<Self> {
        if frames == 0 || vocab_size == 0 {
            return Err(Error::usage("score matrix must be non-empty"));
        }
        if data.len() != frames * vocab_size {
            return Err(Error::usage(format!(
                "expected {} score values, got {}",
                frames * vocab_size,
                data.len()
            )));
        }
        if data.iter().any(|v| v.is_nan()) {
            return Err(Error::usage("score matrix contains NaN"));
        }
        Ok(Self {
            frames,
            vocab_size,
            data,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::usage("ragged score rows"));
        }
        Self::new(rows.len(), n, rows.concat())
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn row(&self, t: usize) -> &[f64] {
        &self.data[t * self.vocab_size..(t + 1) * self.vocab_size]
    }

    #[inline]
    pub fn get(&self, t: usize, n: usize) -> f64 {
        self.data[t * self.vocab_size + n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

impl From<&LogPosteriorMatrix> for ScoreMatrix {
    fn from(m: &LogPosteriorMatrix) -> Self {
        m.to_scores()
    }
}

/// T×D acoustic feature frames.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureSequence {
    frames: usize,
    dim: usize,
    data: Vec<f32>,
}

impl FeatureSequence {
    pub fn new(frames: usize, dim: usize, data: Vec<f32>) -> Result<Self> {
        if frames == 0 || dim == 0 {
            return Err(Error::usage(format!(
                "feature sequence must be non-empty, got {frames}x{dim}"
            )));
        }
        if data.len() != frames * dim {
            return Err(Error::usage(format!(
                "expected {} feature values, got {}",
                frames * dim,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::usage(format!(
                "non-finite feature at frame {}",
                i / dim
            )));
        }
        Ok(Self { frames, dim, data })
    }

    pub fn zeros(frames: usize, dim: usize) -> Result<Self> {
        Self::new(frames, dim, vec![0.0; frames * dim])
    }

    pub fn frames(&self) -> usize {
        self.frames
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn frame(&self, t: usize) -> &[f32] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub(crate) fn frame_mut(&mut self, t: usize) -> &mut [f32] {
        &mut self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }
}
