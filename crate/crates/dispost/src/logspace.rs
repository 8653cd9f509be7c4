//! Log-space numeric primitives shared across the crate.

/// Numerically stable `ln(Σ exp(v_i))` computed with a max shift.
///
/// Entries may be `-inf` (zero-probability terms); `NaN` and `+inf` are
/// rejected in debug builds. Returns `-inf` when every entry is `-inf`.
///
/// # Panics
///
/// Panics when called on an empty slice: the log-sum of nothing is a usage
/// error, not a value.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "log_sum_exp of an empty slice");
    let mut max = f64::NEG_INFINITY;
    for &v in values {
        debug_assert!(!v.is_nan(), "log_sum_exp entry is NaN");
        debug_assert!(v != f64::INFINITY, "log_sum_exp entry is +inf");
        if v > max {
            max = v;
        }
    }
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let sum: f64 = values.iter().map(|&v| (v - max).exp()).sum();
    max + sum.ln()
}

/// Neumaier compensated summation.
///
/// Keeps per-observation log-likelihood sums independent of summation order
/// to well below 1e-9 relative error, so permuting a dataset leaves target
/// evaluations essentially unchanged. Infinite inputs short-circuit to the
/// plain IEEE result (compensation would produce `NaN` from `inf - inf`).
#[derive(Debug, Clone, Copy, Default)]
pub struct StableSum {
    sum: f64,
    compensation: f64,
}

impl StableSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        if !value.is_finite() || !self.sum.is_finite() {
            self.sum += value;
            return;
        }
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.compensation += (self.sum - t) + value;
        } else {
            self.compensation += (value - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        if self.sum.is_finite() {
            self.sum + self.compensation
        } else {
            self.sum
        }
    }
}

/// Sums an iterator of `f64` with compensation.
pub fn stable_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut acc = StableSum::new();
    for v in values {
        acc.add(v);
    }
    acc.value()
}

/// Turns unnormalized log weights into log probabilities by subtracting
/// their log-sum-exp, so `Σ exp(result_i) = 1`.
///
/// # Panics
///
/// Panics on an empty slice or when every entry is `-inf` (there is no
/// distribution to normalize to).
pub fn log_normalize(values: &[f64]) -> Vec<f64> {
    let total = log_sum_exp(values);
    assert!(
        total != f64::NEG_INFINITY,
        "cannot normalize all-zero weights"
    );
    values.iter().map(|&v| v - total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn single_entry_is_identity() {
        assert_eq!(log_sum_exp(&[0.0]), 0.0);
        assert_eq!(log_sum_exp(&[-3.25]), -3.25);
    }

    #[test]
    fn two_equal_halves_sum_to_zero() {
        let half = 0.5f64.ln();
        assert!((log_sum_exp(&[half, half])).abs() < 1e-15);
    }

    #[test]
    fn deep_underflow_is_handled_by_shift() {
        // Both terms underflow exp() directly; the shifted computation gives
        // -1000 + ln(e^0 + e^0) = -1000 + ln 2.
        let expected = -1000.0 + std::f64::consts::LN_2;
        assert_eq!(log_sum_exp(&[-1000.0, -1000.0]), expected);
    }

    #[test]
    fn all_neg_inf_stays_neg_inf() {
        let v = [f64::NEG_INFINITY, f64::NEG_INFINITY];
        assert_eq!(log_sum_exp(&v), f64::NEG_INFINITY);
    }

    #[test]
    fn neg_inf_entries_drop_out() {
        let v = [f64::NEG_INFINITY, -2.0];
        assert_eq!(log_sum_exp(&v), -2.0);
    }

    #[test]
    #[should_panic(expected = "empty")]
    fn empty_input_panics() {
        log_sum_exp(&[]);
    }

    #[test]
    fn stable_sum_matches_plain_sum_on_benign_input() {
        let xs = [1.0, 2.0, 3.5, -0.25];
        assert_eq!(stable_sum(xs.iter().copied()), 6.25);
    }

    #[test]
    fn stable_sum_keeps_small_terms() {
        // 1 + 2^-60 added 2^20 times: a plain f64 loop loses every small term,
        // the compensated sum keeps them.
        let tiny = 2f64.powi(-60);
        let n = 1 << 20;
        let mut acc = StableSum::new();
        acc.add(1.0);
        for _ in 0..n {
            acc.add(tiny);
        }
        let expected = 1.0 + (n as f64) * tiny;
        assert!((acc.value() - expected).abs() < 1e-18);
    }

    #[test]
    fn stable_sum_with_infinity_stays_infinite() {
        let mut acc = StableSum::new();
        acc.add(1.0);
        acc.add(f64::NEG_INFINITY);
        acc.add(2.0);
        assert_eq!(acc.value(), f64::NEG_INFINITY);
    }

    #[test]
    fn log_normalize_produces_a_distribution() {
        let normalized = log_normalize(&[1.0, 2.0, f64::NEG_INFINITY]);
        let total: f64 = normalized.iter().map(|&v| v.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert_eq!(normalized[2], f64::NEG_INFINITY);
        // The ratio between the finite entries is preserved.
        assert!((normalized[1] - normalized[0] - 1.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn permutation_invariant(mut v in proptest::collection::vec(-50.0f64..50.0, 1..20)) {
            let a = log_sum_exp(&v);
            v.reverse();
            let b = log_sum_exp(&v);
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn translation_property(v in proptest::collection::vec(-50.0f64..50.0, 1..20), c in -100.0f64..100.0) {
            // lse(v + c) = lse(v) + c
            let shifted: Vec<f64> = v.iter().map(|x| x + c).collect();
            let lhs = log_sum_exp(&shifted);
            let rhs = log_sum_exp(&v) + c;
            prop_assert!((lhs - rhs).abs() < 1e-10);
        }

        #[test]
        fn dominates_max(v in proptest::collection::vec(-50.0f64..50.0, 1..20)) {
            let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = log_sum_exp(&v);
            prop_assert!(lse >= max - 1e-12);
            prop_assert!(lse <= max + (v.len() as f64).ln() + 1e-12);
        }
    }
}
