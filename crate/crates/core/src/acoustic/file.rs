use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};

use super::{AcousticScorer, MaskKey, ScoreRequest};
use crate::error::{Error, Result};
use crate::lpm;
use crate::matrix::LogPosteriorMatrix;

/// One manifest record: `utterance-id<TAB>mask-id<TAB>path`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub utterance: String,
    pub mask: MaskKey,
    pub path: PathBuf,
}

impl ManifestEntry {
    /// Parses manifest text; relative paths are resolved against `base`.
    pub fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>> {
        let mut out = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let [utt, mask, path] = fields[..] else {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected 3 tab-separated fields, got {}", fields.len()),
                });
            };
            let mask = mask.parse().map_err(|e: Error| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            let path = Path::new(path);
            out.push(ManifestEntry {
                utterance: utt.to_string(),
                mask,
                path: if path.is_absolute() {
                    path.to_path_buf()
                } else {
                    base.join(path)
                },
            });
        }
        Ok(out)
    }
}

/// Scorer backed by pre-computed LPM files, keyed by (utterance, mask).
#[derive(Debug, Clone)]
pub struct FileScorer {
    vocab_size: usize,
    paths: HashMap<(String, MaskKey), PathBuf>,
    order: Vec<String>,
}

impl FileScorer {
    pub fn new(entries: Vec<ManifestEntry>, vocab_size: usize) -> Result<Self> {
        let mut paths = HashMap::new();
        let mut order = Vec::new();
        let mut seen = HashSet::new();
        for e in entries {
            if seen.insert(e.utterance.clone()) {
                order.push(e.utterance.clone());
            }
            let key = (e.utterance, e.mask);
            if paths.contains_key(&key) {
                return Err(Error::usage(format!(
                    "duplicate manifest key ({}, {})",
                    key.0, key.1
                )));
            }
            paths.insert(key, e.path);
        }
        Ok(Self {
            vocab_size,
            paths,
            order,
        })
    }

    pub fn from_manifest(path: impl AsRef<Path>, vocab_size: usize) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::new(ManifestEntry::parse_manifest(&text, base)?, vocab_size)
    }

    /// Utterance ids in first-appearance manifest order.
    pub fn utterances(&self) -> &[String] {
        &self.order
    }

    pub fn path(&self, utterance: &str, mask: MaskKey) -> Option<&Path> {
        self.paths
            .get(&(utterance.to_string(), mask))
            .map(PathBuf::as_path)
    }

    /// Masked variants available for `utterance`, sorted by mask index.
    pub fn masks(&self, utterance: &str) -> Vec<usize> {
        let ks: BTreeSet<usize> = self
            .paths
            .keys()
            .filter_map(|(u, m)| match m {
                MaskKey::Masked(k) if u == utterance => Some(*k),
                _ => None,
            })
            .collect();
        ks.into_iter().collect()
    }

    /// Frame count of the original posterior, read from the LPM header.
    pub fn frames(&self, utterance: &str) -> Result<usize> {
        let path = self
            .path(utterance, MaskKey::Original)
            .ok_or_else(|| Error::usage(format!("no original posterior for {utterance:?}")))?;
        Ok(lpm::read_dimensions(path)?.0)
    }
}

impl AcousticScorer for FileScorer {
    fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    fn score(&self, batch: &[ScoreRequest<'_>]) -> Result<Vec<LogPosteriorMatrix>> {
        batch
            .iter()
            .enumerate()
            .map(|(index, req)| {
                let path = self.path(req.utterance, req.mask).ok_or_else(|| Error::Scoring {
                    index,
                    message: format!("no manifest entry for ({}, {})", req.utterance, req.mask),
                })?;
                let m = lpm::load_lpm(path).map_err(|e| Error::Scoring {
                    index,
                    message: e.to_string(),
                })?;
                if m.vocab_size() != self.vocab_size {
                    return Err(Error::Scoring {
                        index,
                        message: format!(
                            "{} has {} columns, expected {}",
                            path.display(),
                            m.vocab_size(),
                            self.vocab_size
                        ),
                    });
                }
                Ok(m)
            })
            .collect()
    }
}
