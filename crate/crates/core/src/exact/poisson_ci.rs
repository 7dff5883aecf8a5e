use serde::{Deserialize, Serialize};

use super::{two_sided_p, TwoSidedConvention};
use crate::distributions::{chi_square_quantile, PoissonParams};
use crate::error::{Error, Result};
use crate::summary::Interval;

/// Candidate means for the integer-grid inversion: `λ = 0, 1, ..., k + 20 sqrt(k + 1)`.
fn grid_upper(k: u64) -> u64 {
    k + (20.0 * ((k + 1) as f64).sqrt()).ceil() as u64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Grid {
    Real,
    Integer,
}

impl std::str::FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "real" => Ok(Grid::Real),
            "integer" => Ok(Grid::Integer),
            other => Err(Error::Parse(format!("unknown grid '{other}'"))),
        }
    }
}

/// The integer means not rejected by a two-sided test of the observed count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegerCi {
    pub members: Vec<u64>,
    pub level: f64,
    pub convention: TwoSidedConvention,
}

impl IntegerCi {
    pub fn low(&self) -> Option<u64> {
        self.members.first().copied()
    }

    pub fn high(&self) -> Option<u64> {
        self.members.last().copied()
    }

    pub fn is_contiguous(&self) -> bool {
        self.members.windows(2).all(|w| w[1] == w[0] + 1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "grid", rename_all = "kebab-case")]
pub enum PoissonCi {
    Real(Interval),
    Integer(IntegerCi),
}

fn check_level(level: f64) -> Result<()> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::domain(format!("level must lie in (0, 1), got {level}")));
    }
    Ok(())
}

/// Two-sided p-value for observing `k` from a Poisson with mean `lambda`.
pub fn poisson_two_sided_p(k: u64, lambda: f64, convention: TwoSidedConvention) -> Result<f64> {
    let dist = PoissonParams::new(lambda)?;
    Ok(two_sided_p(&dist, k, convention))
}

/// Equal-tail (Garwood) interval for a Poisson mean:
/// `[χ²_{α/2}(2k) / 2, χ²_{1-α/2}(2k + 2) / 2]`, lower end 0 when `k = 0`.
pub fn poisson_mean_ci_equal_tail(k: u64, level: f64) -> Result<Interval> {
    check_level(level)?;
    let alpha = 1.0 - level;
    let low = if k == 0 {
        0.0
    } else {
        0.5 * chi_square_quantile(0.5 * alpha, dof(2 * k)?)?
    };
    let high = 0.5 * chi_square_quantile(1.0 - 0.5 * alpha, dof(2 * k + 2)?)?;
    Ok(Interval { low, high })
}

fn dof(d: u64) -> Result<u32> {
    u32::try_from(d).map_err(|_| Error::domain(format!("count too large for chi-square dof: {d}")))
}

/// Integer means whose two-sided test of `k` gives `p > 1 - level`.
pub fn poisson_mean_ci_integer(
    k: u64,
    level: f64,
    convention: TwoSidedConvention,
) -> Result<IntegerCi> {
    check_level(level)?;
    let alpha = 1.0 - level;
    let mut members = Vec::new();
    for lambda in 0..=grid_upper(k) {
        if poisson_two_sided_p(k, lambda as f64, convention)? > alpha {
            members.push(lambda);
        }
    }
    Ok(IntegerCi { members, level, convention })
}

/// Interval for a Poisson mean on the requested grid. Real-valued endpoints
/// are always equal-tail; `convention` applies to the integer grid.
pub fn poisson_mean_ci(
    k: u64,
    level: f64,
    convention: TwoSidedConvention,
    grid: Grid,
) -> Result<PoissonCi> {
    match grid {
        Grid::Real => poisson_mean_ci_equal_tail(k, level).map(PoissonCi::Real),
        Grid::Integer => poisson_mean_ci_integer(k, level, convention).map(PoissonCi::Integer),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_count_upper_bound_is_exponential_tail() {
        let ci = poisson_mean_ci_equal_tail(0, 0.95).unwrap();
        assert_eq!(ci.low, 0.0);
        assert!((ci.high - (-(0.025f64).ln())).abs() < 1e-10);
    }

    #[test]
    fn integer_grid_for_eight() {
        let expect_high = [
            (TwoSidedConvention::DoubleOneSided, 15),
            (TwoSidedConvention::MinimumLikelihood, 15),
            (TwoSidedConvention::CentralDistance, 16),
        ];
        for (conv, high) in expect_high {
            let ci = poisson_mean_ci_integer(8, 0.95, conv).unwrap();
            assert!(ci.is_contiguous());
            assert_eq!(ci.low(), Some(4), "{conv}");
            assert_eq!(ci.high(), Some(high), "{conv}");
        }
    }

    #[test]
    fn rejects_bad_level() {
        assert!(poisson_mean_ci_equal_tail(3, 1.0).is_err());
        assert!(poisson_mean_ci_integer(3, 0.0, TwoSidedConvention::default()).is_err());
    }
}
