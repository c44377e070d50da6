use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt::Write as _;

use serde::Serialize;

use super::oov::{mine_oov, oov_f1, OovReport, F1_DEFINITION};
use super::wer::{normalize_words, word_error_rate, ErrorCounts, TextNormalization};
use crate::error::{Error, Result};

/// Hypothesis transcripts of one decoding run, keyed by utterance id.
#[derive(Debug, Clone)]
pub struct RunInput {
    pub label: String,
    pub hypotheses: BTreeMap<String, String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct UtteranceErrors {
    pub id: String,
    pub counts: ErrorCounts,
    pub wer: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunEvaluation {
    pub label: String,
    pub method: String,
    pub lm: String,
    pub counts: ErrorCounts,
    /// Pooled corpus WER, `ΣE / ΣR`.
    pub wer: f64,
    /// Relative reduction versus the baseline run; `None` when the baseline WER is 0.
    pub werr: Option<f64>,
    pub oov: Option<OovReport>,
    pub utterances: Vec<UtteranceErrors>,
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub dataset: String,
    pub baseline: String,
    pub oov_definition: Option<&'static str>,
    pub oov_terms: Vec<String>,
    pub runs: Vec<RunEvaluation>,
}

/// Splits `METHOD+LM` labels: `BS` → (`BS`, `no LM`), `SF+target` → (`SF`, `target LM`).
pub fn parse_run_label(label: &str) -> (String, String) {
    match label.split_once('+') {
        Some((method, lm)) => (method.to_string(), format!("{lm} LM")),
        None => (label.to_string(), "no LM".to_string()),
    }
}

fn werr(base: f64, wer: f64) -> Option<f64> {
    (base > 0.0).then(|| (base - wer) / base)
}

impl EvalReport {
    /// Scores each run against `references` (utterance id → text). Missing
    /// hypotheses count as empty; the fold runs in utterance-id order.
    pub fn evaluate(
        dataset: &str,
        references: &BTreeMap<String, String>,
        runs: &[RunInput],
        baseline: Option<&str>,
        norm: &TextNormalization,
        training_vocabulary: Option<&HashSet<String>>,
    ) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::usage("no hypothesis runs to evaluate"));
        }
        let baseline = baseline.unwrap_or(&runs[0].label).to_string();
        if !runs.iter().any(|r| r.label == baseline) {
            return Err(Error::usage(format!("baseline run {baseline:?} not among the runs")));
        }
        let ref_words: Vec<Vec<String>> = references.values().map(|t| normalize_words(t, norm)).collect();
        let oov_terms: Option<BTreeSet<String>> = training_vocabulary.map(|v| mine_oov(&ref_words, v));

        let mut evaluated = Vec::with_capacity(runs.len());
        for run in runs {
            let hyp_words: Vec<Vec<String>> = references
                .keys()
                .map(|id| run.hypotheses.get(id).map(|t| normalize_words(t, norm)).unwrap_or_default())
                .collect();
            let mut total = ErrorCounts::default();
            let utterances = references
                .keys()
                .zip(ref_words.iter().zip(&hyp_words))
                .map(|(id, (r, h))| {
                    let counts = word_error_rate(r, h);
                    total.accumulate(&counts);
                    UtteranceErrors {
                        id: id.clone(),
                        counts,
                        wer: counts.wer(),
                    }
                })
                .collect();
            let oov = oov_terms
                .as_ref()
                .map(|terms| oov_f1(&ref_words, &hyp_words, terms))
                .transpose()?;
            let (method, lm) = parse_run_label(&run.label);
            evaluated.push(RunEvaluation {
                label: run.label.clone(),
                method,
                lm,
                counts: total,
                wer: total.wer(),
                werr: None,
                oov,
                utterances,
            });
        }
        let base_wer = evaluated.iter().find(|r| r.label == baseline).map(|r| r.wer).unwrap();
        for r in &mut evaluated {
            if r.label != baseline {
                r.werr = werr(base_wer, r.wer);
            }
        }
        Ok(Self {
            dataset: dataset.to_string(),
            baseline,
            oov_definition: oov_terms.as_ref().map(|_| F1_DEFINITION),
            oov_terms: oov_terms.map(|t| t.into_iter().collect()).unwrap_or_default(),
            runs: evaluated,
        })
    }

    /// `(lm, [BS, SF, ILME])` F1 rows, one per external LM seen in the runs.
    pub fn oov_rows(&self) -> Vec<(String, [Option<f64>; 3])> {
        let f1 = |method: &str, lm: &str| {
            self.runs
                .iter()
                .find(|r| r.method == method && r.lm == lm)
                .and_then(|r| r.oov.as_ref())
                .map(|o| o.f1)
        };
        let bs = self
            .runs
            .iter()
            .find(|r| r.label == self.baseline)
            .and_then(|r| r.oov.as_ref())
            .map(|o| o.f1);
        let mut lms: Vec<&str> = Vec::new();
        for r in &self.runs {
            if r.lm != "no LM" && !lms.contains(&r.lm.as_str()) {
                lms.push(&r.lm);
            }
        }
        lms.into_iter()
            .map(|lm| (lm.to_string(), [bs, f1("SF", lm), f1("ILME", lm)]))
            .collect()
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "dataset: {}", self.dataset);
        let _ = writeln!(out, "baseline: {}", self.baseline);
        out.push('\n');
        let method_w = self.runs.iter().map(|r| r.method.len()).max().unwrap_or(0).max(6);
        let lm_w = self.runs.iter().map(|r| r.lm.len()).max().unwrap_or(0).max(2);
        let _ = writeln!(out, "{:<method_w$}  {:<lm_w$}  {:>7}  {:>9}", "Method", "LM", "WER%", "WERR");
        for r in &self.runs {
            let werr = match (r.label == self.baseline, r.werr) {
                (true, _) => "-".to_string(),
                (false, Some(w)) => format!("({:+.1}%)", 100.0 * w),
                (false, None) => "n/a".to_string(),
            };
            let _ = writeln!(
                out,
                "{:<method_w$}  {:<lm_w$}  {:>7.2}  {:>9}",
                r.method,
                r.lm,
                100.0 * r.wer,
                werr
            );
        }
        out.push('\n');
        for r in &self.runs {
            let c = &r.counts;
            let _ = writeln!(
                out,
                "{}: WER {:.3} (S={} D={} I={} R={})",
                r.label, r.wer, c.substitutions, c.deletions, c.insertions, c.reference_words
            );
        }
        if let Some(def) = self.oov_definition {
            out.push('\n');
            let _ = writeln!(out, "# {def}");
            let _ = writeln!(out, "# {} OOV terms: {}", self.oov_terms.len(), self.oov_terms.join(" "));
            let rows = self.oov_rows();
            let name_w = rows
                .iter()
                .map(|(lm, _)| self.dataset.len() + lm.len() + 3)
                .max()
                .unwrap_or(7)
                .max(7);
            let _ = writeln!(out, "{:<name_w$}  {:>5}  {:>5}  {:>5}", "Dataset", "BS", "SF", "ILME");
            let cell = |v: Option<f64>| v.map_or("-".to_string(), |f| format!("{:.1}", 100.0 * f));
            for (lm, [bs, sf, ilme]) in rows {
                let name = format!("{} ({lm})", self.dataset);
                let _ = writeln!(
                    out,
                    "{name:<name_w$}  {:>5}  {:>5}  {:>5}",
                    cell(bs),
                    cell(sf),
                    cell(ilme)
                );
            }
        }
        out
    }
}
