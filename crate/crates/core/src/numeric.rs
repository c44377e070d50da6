//! Log-domain numeric helpers.

use crate::error::{Error, Result};

/// Stable `log(sum(exp(v)))` over a non-empty slice.
///
/// Returns negative infinity iff every input is negative infinity.
pub fn log_sum_exp(values: &[f64]) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::usage("log_sum_exp of an empty list"));
    }
    Ok(log_sum_exp_unchecked(values))
}

pub(crate) fn log_sum_exp_unchecked(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|v| (v - max).exp()).sum();
    max + sum.ln()
}

/// `log(exp(a) + exp(b))`.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Normalizes `row` into a log-probability distribution.
pub fn log_softmax(row: &[f64]) -> Vec<f64> {
    let mut out = row.to_vec();
    log_softmax_in_place(&mut out);
    out
}

pub(crate) fn log_softmax_in_place(row: &mut [f64]) {
    let lse = log_sum_exp_unchecked(row);
    for v in row.iter_mut() {
        *v -= lse;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn log_sum_exp_examples() {
        assert_eq!(log_sum_exp(&[0.0]).unwrap(), 0.0);
        assert_abs_diff_eq!(
            log_sum_exp(&[0.5f64.ln(), 0.5f64.ln()]).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        // -1000 + ln 2, ln 2 = 0.693147180559945309417...
        assert_abs_diff_eq!(
            log_sum_exp(&[-1000.0, -1000.0]).unwrap(),
            -999.306_852_819_440_1,
            epsilon = 1e-12
        );
    }

    #[test]
    fn log_sum_exp_infinities() {
        assert!(matches!(log_sum_exp(&[]), Err(Error::Usage(_))));
        assert_eq!(
            log_sum_exp(&[f64::NEG_INFINITY, f64::NEG_INFINITY]).unwrap(),
            f64::NEG_INFINITY
        );
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn log_softmax_examples() {
        let quarter = 0.25f64.ln();
        for v in log_softmax(&[0.0; 4]) {
            assert_abs_diff_eq!(v, quarter, epsilon = 1e-15);
        }
        for v in log_softmax(&[5.0, 5.0]) {
            assert_abs_diff_eq!(v, 0.5f64.ln(), epsilon = 1e-15);
        }
        // 1 - ln(1 + e) = -0.313261687518...
        let out = log_softmax(&[1.0, 0.0]);
        assert_abs_diff_eq!(out[0], -0.31326, epsilon = 1e-5);
        assert_abs_diff_eq!(out[1], -1.31326, epsilon = 1e-5);
    }

    #[test]
    fn log_add_matches_log_sum_exp() {
        assert_abs_diff_eq!(log_add(-3.0, -4.5), log_sum_exp(&[-3.0, -4.5]).unwrap(), epsilon = 1e-15);
        assert_eq!(log_add(f64::NEG_INFINITY, -2.0), -2.0);
    }

    proptest! {
        #[test]
        fn log_softmax_normalized_and_shift_invariant(row in prop::collection::vec(-50.0f64..50.0, 1..40)) {
            let out = log_softmax(&row);
            prop_assert!(log_sum_exp(&out).unwrap().abs() <= 1e-9);
            for i in 0..row.len() {
                for j in 0..row.len() {
                    prop_assert!(((out[i] - out[j]) - (row[i] - row[j])).abs() <= 1e-9);
                }
            }
        }

        #[test]
        fn log_softmax_idempotent(row in prop::collection::vec(-50.0f64..50.0, 1..40)) {
            let once = log_softmax(&row);
            let twice = log_softmax(&once);
            for (a, b) in once.iter().zip(&twice) {
                prop_assert!((a - b).abs() <= 1e-9);
            }
        }
    }
}
