use serde::{Deserialize, Serialize};

/// A probability held as its natural log.
///
/// Probability zero is an explicit flag rather than `-inf`, so degenerate
/// point masses stay distinguishable from underflow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogProb {
    value: f64,
    zero: bool,
}

impl LogProb {
    pub const ZERO: LogProb = LogProb { value: 0.0, zero: true };
    pub const ONE: LogProb = LogProb { value: 0.0, zero: false };

    /// Wraps a natural-log probability. `-inf` maps to [`LogProb::ZERO`];
    /// positive rounding noise is clamped to zero.
    pub fn from_ln(value: f64) -> Self {
        if value == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            debug_assert!(!value.is_nan(), "NaN log-probability");
            LogProb { value: value.min(0.0), zero: false }
        }
    }

    pub fn from_prob(p: f64) -> Self {
        if p <= 0.0 {
            Self::ZERO
        } else {
            Self::from_ln(p.ln())
        }
    }

    /// The log value, or `None` for probability zero.
    pub fn ln(self) -> Option<f64> {
        (!self.zero).then_some(self.value)
    }

    /// The log value with zero mapped to `-inf`, for comparisons.
    pub fn ln_or_neg_inf(self) -> f64 {
        if self.zero {
            f64::NEG_INFINITY
        } else {
            self.value
        }
    }

    pub fn prob(self) -> f64 {
        if self.zero {
            0.0
        } else {
            self.value.exp()
        }
    }

    pub fn is_zero(self) -> bool {
        self.zero
    }
}

/// Stable `ln Σ exp(xᵢ)` over log-probabilities.
pub fn log_sum_exp<I>(terms: I) -> LogProb
where
    I: IntoIterator<Item = LogProb>,
    I::IntoIter: Clone,
{
    let iter = terms.into_iter();
    let max = iter.clone().filter_map(LogProb::ln).fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return LogProb::ZERO;
    }
    let sum: f64 = iter.filter_map(LogProb::ln).map(|v| (v - max).exp()).sum();
    LogProb::from_ln(max + sum.ln())
}
