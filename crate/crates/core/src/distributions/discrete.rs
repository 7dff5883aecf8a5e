use serde::{Deserialize, Serialize};

use super::log_prob::LogProb;
use super::special::{beta_pq, bd0, gamma_pq, stirling_remainder};
use crate::error::{Error, Result};

/// Binomial cdfs with at most this many trials are evaluated by log-space
/// summation of the pmf; larger ones go through the incomplete beta.
pub const SUMMATION_LIMIT: u64 = 2000;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

/// A count distribution whose log-pmf rises weakly to its mode and falls
/// weakly after it. The exact tests are written against this trait.
pub trait CountDistribution {
    fn log_pmf_at(&self, k: u64) -> LogProb;
    /// `P(X <= k)`
    fn cdf_at(&self, k: u64) -> f64;
    /// `P(X >= k)`
    fn sf_at(&self, k: u64) -> f64;
    fn mean(&self) -> f64;
    fn mode(&self) -> u64;
    /// Largest point of the support, `None` if unbounded.
    fn support_max(&self) -> Option<u64>;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinomialParams {
    n: u64,
    p: f64,
}

impl BinomialParams {
    pub fn new(n: u64, p: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::domain("binomial requires n >= 1"));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("binomial requires p in [0, 1], got {p}")));
        }
        Ok(Self { n, p })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    fn q(&self) -> f64 {
        1.0 - self.p
    }

    fn check(&self, k: u64) -> Result<()> {
        if k > self.n {
            return Err(Error::domain(format!("k = {k} outside [0, {}]", self.n)));
        }
        Ok(())
    }

    fn log_pmf_unchecked(&self, k: u64) -> LogProb {
        let (n, p, q) = (self.n, self.p, self.q());
        if p == 0.0 {
            return if k == 0 { LogProb::ONE } else { LogProb::ZERO };
        }
        if p == 1.0 {
            return if k == n { LogProb::ONE } else { LogProb::ZERO };
        }
        let nf = n as f64;
        if k == 0 {
            return LogProb::from_ln(nf * (-p).ln_1p());
        }
        if k == n {
            return LogProb::from_ln(nf * p.ln());
        }
        let kf = k as f64;
        let rest = (n - k) as f64;
        // Saddle-point form: exact algebraically, stable for large n.
        let lc = stirling_remainder(nf)
            - stirling_remainder(kf)
            - stirling_remainder(rest)
            - bd0(kf, nf * p)
            - bd0(rest, nf * q);
        let lf = LN_2PI + kf.ln() + (-kf / nf).ln_1p();
        LogProb::from_ln(lc - 0.5 * lf)
    }

    fn cdf_by_summation_unchecked(&self, k: u64) -> f64 {
        self.sum_range(0, k)
    }

    fn sf_by_summation_unchecked(&self, k: u64) -> f64 {
        self.sum_range(k, self.n)
    }

    /// `P(lo <= X <= hi)` as a log-sum-exp anchored at the largest term:
    /// the anchor mass is evaluated in log space and the other terms are
    /// reached through exact pmf ratios.
    fn sum_range(&self, lo: u64, hi: u64) -> f64 {
        let (n, p, q) = (self.n, self.p, self.q());
        if p == 0.0 || p == 1.0 {
            let point = if p == 0.0 { 0 } else { n };
            return if (lo..=hi).contains(&point) { 1.0 } else { 0.0 };
        }
        let anchor = self.mode().clamp(lo, hi);
        let odds = p / q;
        let mut sum = 1.0;

        let mut term = 1.0;
        let mut x = anchor;
        while x > lo {
            // pmf(x - 1) / pmf(x)
            term *= x as f64 / ((n - x + 1) as f64 * odds);
            x -= 1;
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }

        term = 1.0;
        x = anchor;
        while x < hi {
            // pmf(x + 1) / pmf(x)
            term *= (n - x) as f64 * odds / (x + 1) as f64;
            x += 1;
            sum += term;
            if term < sum * 1e-17 {
                break;
            }
        }

        let ln_anchor = self.log_pmf_unchecked(anchor).ln_or_neg_inf();
        (ln_anchor + sum.ln()).exp().min(1.0)
    }

    fn cdf_by_beta_unchecked(&self, k: u64) -> f64 {
        if k >= self.n {
            return 1.0;
        }
        if self.p == 0.0 {
            return 1.0;
        }
        if self.p == 1.0 {
            return 0.0;
        }
        beta_pq((self.n - k) as f64, (k + 1) as f64, self.q(), self.p).0
    }

    fn sf_by_beta_unchecked(&self, k: u64) -> f64 {
        if k == 0 {
            return 1.0;
        }
        if self.p == 0.0 {
            return 0.0;
        }
        if self.p == 1.0 {
            return 1.0;
        }
        beta_pq(k as f64, (self.n - k + 1) as f64, self.p, self.q()).0
    }
}

impl CountDistribution for BinomialParams {
    fn log_pmf_at(&self, k: u64) -> LogProb {
        if k > self.n {
            LogProb::ZERO
        } else {
            self.log_pmf_unchecked(k)
        }
    }

    fn cdf_at(&self, k: u64) -> f64 {
        let k = k.min(self.n);
        if k == self.n {
            1.0
        } else if self.n <= SUMMATION_LIMIT {
            self.cdf_by_summation_unchecked(k)
        } else {
            self.cdf_by_beta_unchecked(k)
        }
    }

    fn sf_at(&self, k: u64) -> f64 {
        if k == 0 {
            1.0
        } else if k > self.n {
            0.0
        } else if self.n <= SUMMATION_LIMIT {
            self.sf_by_summation_unchecked(k)
        } else {
            self.sf_by_beta_unchecked(k)
        }
    }

    fn mean(&self) -> f64 {
        self.n as f64 * self.p
    }

    fn mode(&self) -> u64 {
        (((self.n + 1) as f64 * self.p).floor() as u64).min(self.n)
    }

    fn support_max(&self) -> Option<u64> {
        Some(self.n)
    }
}

pub fn binomial_log_pmf(k: u64, params: &BinomialParams) -> Result<LogProb> {
    params.check(k)?;
    Ok(params.log_pmf_unchecked(k))
}

/// `P(X <= k)`: log-space summation up to [`SUMMATION_LIMIT`] trials,
/// incomplete beta above.
pub fn binomial_cdf(k: u64, params: &BinomialParams) -> Result<f64> {
    params.check(k)?;
    Ok(params.cdf_at(k))
}

/// `P(X >= k)`, computed directly rather than as `1 - cdf`.
pub fn binomial_sf(k: u64, params: &BinomialParams) -> Result<f64> {
    params.check(k)?;
    Ok(params.sf_at(k))
}

pub fn binomial_cdf_by_summation(k: u64, params: &BinomialParams) -> Result<f64> {
    params.check(k)?;
    Ok(params.cdf_by_summation_unchecked(k))
}

/// `P(X <= k) = I_{1-p}(n - k, k + 1)`.
pub fn binomial_cdf_by_beta(k: u64, params: &BinomialParams) -> Result<f64> {
    params.check(k)?;
    Ok(params.cdf_by_beta_unchecked(k))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonParams {
    lambda: f64,
}

impl PoissonParams {
    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0) || lambda.is_infinite() {
            return Err(Error::domain(format!("poisson requires a finite lambda >= 0, got {lambda}")));
        }
        Ok(Self { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl CountDistribution for PoissonParams {
    fn log_pmf_at(&self, k: u64) -> LogProb {
        let lambda = self.lambda;
        if lambda == 0.0 {
            return if k == 0 { LogProb::ONE } else { LogProb::ZERO };
        }
        if k == 0 {
            return LogProb::from_ln(-lambda);
        }
        let kf = k as f64;
        LogProb::from_ln(-stirling_remainder(kf) - bd0(kf, lambda) - 0.5 * (LN_2PI + kf.ln()))
    }

    fn cdf_at(&self, k: u64) -> f64 {
        if self.lambda == 0.0 {
            return 1.0;
        }
        gamma_pq((k + 1) as f64, self.lambda).1
    }

    fn sf_at(&self, k: u64) -> f64 {
        if k == 0 {
            return 1.0;
        }
        if self.lambda == 0.0 {
            return 0.0;
        }
        gamma_pq(k as f64, self.lambda).0
    }

    fn mean(&self) -> f64 {
        self.lambda
    }

    fn mode(&self) -> u64 {
        self.lambda.floor() as u64
    }

    fn support_max(&self) -> Option<u64> {
        None
    }
}

pub fn poisson_log_pmf(k: u64, params: &PoissonParams) -> LogProb {
    params.log_pmf_at(k)
}

/// `P(X <= k) = Q(k + 1, λ)`.
pub fn poisson_cdf(k: u64, params: &PoissonParams) -> f64 {
    params.cdf_at(k)
}

/// `P(X >= k) = P(k, λ)` for `k >= 1`.
pub fn poisson_sf(k: u64, params: &PoissonParams) -> f64 {
    params.sf_at(k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_urns_are_point_masses() {
        let b = BinomialParams::new(5, 0.0).unwrap();
        assert_eq!(binomial_log_pmf(0, &b).unwrap(), LogProb::ONE);
        assert!(binomial_log_pmf(3, &b).unwrap().is_zero());
        let b = BinomialParams::new(5, 1.0).unwrap();
        assert_eq!(binomial_log_pmf(5, &b).unwrap(), LogProb::ONE);
        assert_eq!(binomial_cdf(4, &b).unwrap(), 0.0);
        assert_eq!(binomial_cdf_by_beta(4, &b).unwrap(), 0.0);
    }

    #[test]
    fn small_symmetric_case() {
        let b = BinomialParams::new(4, 0.5).unwrap();
        let lp = binomial_log_pmf(2, &b).unwrap().ln().unwrap();
        assert!((lp - (6.0f64 / 16.0).ln()).abs() < 1e-14);
        assert!((binomial_cdf(2, &b).unwrap() - 11.0 / 16.0).abs() < 1e-15);
        assert_eq!(binomial_cdf(4, &b).unwrap(), 1.0);
    }

    #[test]
    fn out_of_range_counts_are_domain_errors() {
        let b = BinomialParams::new(4, 0.5).unwrap();
        assert!(binomial_log_pmf(5, &b).is_err());
        assert!(binomial_cdf(5, &b).is_err());
        assert!(BinomialParams::new(0, 0.5).is_err());
        assert!(BinomialParams::new(3, 1.5).is_err());
        assert!(PoissonParams::new(-1.0).is_err());
    }

    #[test]
    fn poisson_closed_forms() {
        let p0 = PoissonParams::new(0.0).unwrap();
        assert_eq!(poisson_log_pmf(0, &p0), LogProb::ONE);
        assert_eq!(poisson_cdf(0, &p0), 1.0);
        let p1 = PoissonParams::new(1.0).unwrap();
        assert!((poisson_log_pmf(1, &p1).prob() - (-1f64).exp()).abs() < 1e-16);
    }

    #[test]
    fn poisson_cdf_matches_extended_precision() {
        // P(X <= 8 | λ = 16), 50-digit reference
        let p = PoissonParams::new(16.0).unwrap();
        assert!((poisson_cdf(8, &p) - 0.021_987_253_549_058_757).abs() < 1e-15);
    }
}
