use serde::Serialize;

/// A decoded, collapsed token sequence with its decomposed score terms.
///
/// `total_score = acoustic_score − λ_I·ilm_score + λ_T·lm_score + bonus_score`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Hypothesis {
    pub tokens: Vec<usize>,
    pub acoustic_score: f64,
    pub ilm_score: f64,
    pub lm_score: f64,
    /// Token insertion bonus times hypothesis length.
    pub bonus_score: f64,
    pub total_score: f64,
}

impl Hypothesis {
    /// Recomputes the total from the component terms.
    pub fn recompose(&self, lambda_ilm: f64, lambda_lm: f64) -> f64 {
        let mut total = self.acoustic_score + self.bonus_score;
        if lambda_ilm != 0.0 {
            total -= lambda_ilm * self.ilm_score;
        }
        if lambda_lm != 0.0 {
            total += lambda_lm * self.lm_score;
        }
        total
    }
}
