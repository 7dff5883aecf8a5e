//! Exact small-count inference: exact binomial tests under three two-sided
//! conventions, Poisson mean intervals, the Clopper-Pearson proportion
//! interval, and the Kruskal-Wallis rank test.

mod kruskal;
mod poisson_ci;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::distributions::CountDistribution;
use crate::error::{Error, Result};

pub use binomial_test::{binomial_proportion_ci, exact_binomial_test};
pub use kruskal::kruskal_wallis;
pub use poisson_ci::{
    poisson_mean_ci, poisson_mean_ci_equal_tail, poisson_mean_ci_integer, poisson_two_sided_p,
    Grid, IntegerCi, PoissonCi,
};

/// Membership tolerance, on the log scale, for the minimum-likelihood rule
/// `pmf(x) <= pmf(k)`.
pub const MIN_LIKELIHOOD_LOG_TOL: f64 = 1e-12;

/// Relative tolerance on distances from the mean for the central-distance
/// rule, so that mirror points of `k` are included despite rounding in `n p`.
pub const CENTRAL_DISTANCE_REL_TOL: f64 = 1e-9;

/// How a two-sided p-value is formed from a discrete null distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TwoSidedConvention {
    /// `2 · min(P(X <= k), P(X >= k))`, capped at 1.
    DoubleOneSided,
    /// Sum of all masses no larger than the observed one.
    #[default]
    MinimumLikelihood,
    /// `P(|X - E X| >= |k - E X|)`.
    CentralDistance,
}

impl TwoSidedConvention {
    pub const ALL: [TwoSidedConvention; 3] =
        [Self::DoubleOneSided, Self::MinimumLikelihood, Self::CentralDistance];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::DoubleOneSided => "double-one-sided",
            Self::MinimumLikelihood => "minimum-likelihood",
            Self::CentralDistance => "central-distance",
        }
    }
}

impl fmt::Display for TwoSidedConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TwoSidedConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown two-sided convention '{s}'")))
    }
}

/// `k` successes out of `n` trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountSample {
    pub k: u64,
    pub n: u64,
}

impl CountSample {
    pub fn new(k: u64, n: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("count sample needs n >= 1"));
        }
        if k > n {
            return Err(Error::domain(format!("count sample needs k <= n, got {k} > {n}")));
        }
        Ok(Self { k, n })
    }
}

/// Two-sided p-value of observing `k` under `dist`.
pub(crate) fn two_sided_p<D: CountDistribution>(
    dist: &D,
    k: u64,
    convention: TwoSidedConvention,
) -> f64 {
    match convention {
        TwoSidedConvention::DoubleOneSided => {
            (2.0 * dist.cdf_at(k).min(dist.sf_at(k))).min(1.0)
        }
        TwoSidedConvention::MinimumLikelihood => minimum_likelihood_p(dist, k),
        TwoSidedConvention::CentralDistance => central_distance_p(dist, k),
    }
}

fn tails_p<D: CountDistribution>(dist: &D, lower_end: Option<u64>, upper_start: Option<u64>) -> f64 {
    let lower = lower_end.map_or(0.0, |a| dist.cdf_at(a));
    let upper = upper_start.map_or(0.0, |b| dist.sf_at(b));
    (lower + upper).min(1.0)
}

fn minimum_likelihood_p<D: CountDistribution>(dist: &D, k: u64) -> f64 {
    let Some(observed) = dist.log_pmf_at(k).ln() else {
        return 0.0;
    };
    let threshold = observed + MIN_LIKELIHOOD_LOG_TOL;
    let qualifies = |x: u64| dist.log_pmf_at(x).ln_or_neg_inf() <= threshold;

    let mode = dist.mode();
    if qualifies(mode) {
        return 1.0;
    }

    // The qualifying set is [0, a] ∪ [b, ∞) by unimodality.
    let lower_end = if mode > 0 && qualifies(0) {
        let (mut lo, mut hi) = (0u64, mode);
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if qualifies(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(lo)
    } else {
        None
    };

    let far = match dist.support_max() {
        Some(max) => (max > mode && qualifies(max)).then_some(max),
        None => {
            let mut step = 1u64;
            let mut hi = mode + 1;
            while !qualifies(hi) {
                step = step.saturating_mul(2);
                hi = hi.saturating_add(step);
            }
            Some(hi)
        }
    };
    let upper_start = far.map(|mut hi| {
        let mut lo = mode;
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if qualifies(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    });

    tails_p(dist, lower_end, upper_start)
}

fn central_distance_p<D: CountDistribution>(dist: &D, k: u64) -> f64 {
    let mean = dist.mean();
    let distance = (k as f64 - mean).abs();
    let tol = CENTRAL_DISTANCE_REL_TOL * mean.abs().max(1.0);
    if distance <= tol {
        return 1.0;
    }
    let lower_edge = mean - distance + tol;
    let lower_end = (lower_edge >= 0.0).then(|| lower_edge.floor() as u64);
    let upper_edge = (mean + distance - tol).ceil();
    let upper_start = match dist.support_max() {
        Some(max) if upper_edge > max as f64 => None,
        _ => Some(upper_edge as u64),
    };
    tails_p(dist, lower_end, upper_start)
}
