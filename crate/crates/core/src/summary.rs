//! Inference from published summary statistics: converting confidence
//! intervals to standard errors and back, pooling binned summaries, and
//! the two-sample z-test on pooled summaries.

use std::io::Read;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::distributions::{normal_cdf, normal_quantile};
use crate::error::{Error, Result};
use crate::test_result::{Method, TestResult};

pub const DEFAULT_LEVEL: f64 = 0.95;

const LEVEL_EPS: f64 = 1e-12;

fn default_level() -> f64 {
    DEFAULT_LEVEL
}

/// One bin of a published table: count, mean and a symmetric normal CI on
/// the mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinSummary {
    pub label: String,
    pub n: u64,
    pub mean: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    #[serde(default = "default_level")]
    pub level: f64,
}

impl BinSummary {
    pub fn new(
        label: impl Into<String>,
        n: u64,
        mean: f64,
        ci_low: f64,
        ci_high: f64,
        level: f64,
    ) -> Result<Self> {
        let bin = Self { label: label.into(), n, mean, ci_low, ci_high, level };
        bin.validate()?;
        Ok(bin)
    }

    /// Builds a bin from a mean and its standard error.
    pub fn from_se(label: impl Into<String>, n: u64, mean: f64, se: f64, level: f64) -> Result<Self> {
        let ci = se_to_ci(mean, se, level)?;
        Self::new(label, n, mean, ci.low, ci.high, level)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::domain(format!("bin '{}': n must be >= 1", self.label)));
        }
        check_level(self.level)?;
        if !(self.ci_low <= self.mean && self.mean <= self.ci_high) {
            return Err(Error::domain(format!(
                "bin '{}': need ci_low <= mean <= ci_high, got {} / {} / {}",
                self.label, self.ci_low, self.mean, self.ci_high
            )));
        }
        Ok(())
    }

    pub fn se(&self) -> Result<f64> {
        ci_to_se(self.ci_low, self.ci_high, self.level)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PooledSummary {
    pub n: u64,
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("confidence level must lie in (0, 1), got {level}")));
    }
    Ok(())
}

/// Two-sided critical value for `level`.
pub fn critical_z(level: f64) -> Result<f64> {
    check_level(level)?;
    normal_quantile(0.5 * (1.0 + level))
}

/// Standard error implied by a symmetric normal CI: width / (2 z).
pub fn ci_to_se(ci_low: f64, ci_high: f64, level: f64) -> Result<f64> {
    if !(ci_low <= ci_high) {
        return Err(Error::domain(format!("ci_low {ci_low} exceeds ci_high {ci_high}")));
    }
    let z = critical_z(level)?;
    Ok((ci_high - ci_low) / (2.0 * z))
}

pub fn se_to_ci(mean: f64, se: f64, level: f64) -> Result<Interval> {
    if !(se >= 0.0) {
        return Err(Error::domain(format!("standard error must be >= 0, got {se}")));
    }
    let half = critical_z(level)? * se;
    Ok(Interval { low: mean - half, high: mean + half })
}

/// Pools independent bins into one sample: the count-weighted mean and the
/// standard error of that mean, `sqrt(Σ (nᵢ seᵢ)²) / Σ nᵢ`.
pub fn pool_bins(bins: &[BinSummary]) -> Result<PooledSummary> {
    let first = bins.first().ok_or(Error::Empty("pool_bins needs at least one bin"))?;
    let mut total = 0u64;
    let mut weighted_mean = 0.0;
    let mut var_sum = 0.0;
    for bin in bins {
        bin.validate()?;
        if (bin.level - first.level).abs() > LEVEL_EPS {
            return Err(Error::LevelMismatch { expected: first.level, found: bin.level });
        }
        let n = bin.n as f64;
        total += bin.n;
        weighted_mean += n * bin.mean;
        let scaled = n * bin.se()?;
        var_sum += scaled * scaled;
    }
    let total_f = total as f64;
    Ok(PooledSummary { n: total, mean: weighted_mean / total_f, se: var_sum.sqrt() / total_f })
}

/// Two-sample test of equal means using standard normal critical values.
///
/// `p_one_sided_low` is `Φ(z)`: the probability of `a` falling at least this
/// far below `b`.
pub fn two_sample_z_test(a: &PooledSummary, b: &PooledSummary) -> Result<TestResult> {
    if !(a.se >= 0.0 && b.se >= 0.0) {
        return Err(Error::domain("standard errors must be >= 0"));
    }
    let inputs = json!({ "a": a, "b": b });
    let se_diff = a.se.hypot(b.se);
    let diff = a.mean - b.mean;
    if se_diff == 0.0 {
        // Both samples are exact. Equal means give 0/0; report p = 1.
        let (z, p_two, p_low) = if diff == 0.0 {
            (0.0, 1.0, 0.5)
        } else if diff < 0.0 {
            (f64::NEG_INFINITY, 0.0, 0.0)
        } else {
            (f64::INFINITY, 0.0, 1.0)
        };
        return Ok(TestResult {
            statistic: z,
            p_two_sided: p_two,
            p_one_sided_low: Some(p_low),
            method: Method::TwoSampleZ,
            convention: None,
            degenerate: true,
            inputs,
        });
    }
    let z = diff / se_diff;
    Ok(TestResult {
        statistic: z,
        p_two_sided: (2.0 * normal_cdf(-z.abs())).min(1.0),
        p_one_sided_low: Some(normal_cdf(z)),
        method: Method::TwoSampleZ,
        convention: None,
        degenerate: false,
        inputs,
    })
}

#[derive(Debug, Deserialize)]
struct BinRow {
    label: String,
    n: u64,
    mean: f64,
    ci_low: f64,
    ci_high: f64,
    #[serde(default)]
    level: Option<f64>,
}

/// Reads a delimited bin table with header `label,n,mean,ci_low,ci_high[,level]`.
pub fn read_bin_table<R: Read>(reader: R) -> Result<Vec<BinSummary>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut bins = Vec::new();
    for (i, row) in rdr.deserialize::<BinRow>().enumerate() {
        let row = row.map_err(|e| Error::Parse(format!("bin table row {}: {e}", i + 1)))?;
        bins.push(BinSummary::new(
            row.label,
            row.n,
            row.mean,
            row.ci_low,
            row.ci_high,
            row.level.unwrap_or(DEFAULT_LEVEL),
        )?);
    }
    if bins.is_empty() {
        return Err(Error::Empty("bin table has no rows"));
    }
    Ok(bins)
}
