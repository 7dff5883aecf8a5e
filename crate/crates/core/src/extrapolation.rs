//! Rule-of-proportions arithmetic between a local study and a national
//! population: case fatality, infection fatality and detection rates, the
//! two competing extrapolations of national infections, and identification
//! intervals spanning them.
//!
//! All ratios are exact rationals; real renderings are derived from them.

use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::exact::{
    exact_binomial_test, poisson_mean_ci_equal_tail, poisson_mean_ci_integer, CountSample,
    TwoSidedConvention,
};
use crate::test_result::TestResult;

pub type Rational = Ratio<i128>;

pub const NO_DEMOGRAPHIC_ADJUSTMENT: &str =
    "no demographic adjustment between regions: both are treated as draws from one population";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegionCounts {
    pub name: String,
    pub deaths: u64,
    pub confirmed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_infections: Option<u64>,
}

impl RegionCounts {
    pub fn new(name: impl Into<String>, deaths: u64, confirmed: u64, true_infections: Option<u64>) -> Self {
        Self { name: name.into(), deaths, confirmed, true_infections }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("region counts: {e}")))
    }

    /// Soft consistency checks; these never fail a computation.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.deaths > self.confirmed {
            out.push(format!(
                "{}: deaths ({}) exceed confirmed cases ({})",
                self.name, self.deaths, self.confirmed
            ));
        }
        if let Some(t) = self.true_infections {
            if self.confirmed > t {
                out.push(format!(
                    "{}: confirmed cases ({}) exceed true infections ({t})",
                    self.name, self.confirmed
                ));
            }
        }
        out
    }

    fn infections(&self) -> Result<u64> {
        self.true_infections
            .ok_or_else(|| Error::domain(format!("{}: true_infections is required", self.name)))
    }
}

fn serialize_rational<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

fn int(x: u64) -> Rational {
    Rational::from_integer(x.into())
}

fn to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// Renders `value` as a percentage with `decimals` places, rounding half
/// away from zero on the exact value.
pub fn render_percent(value: &Rational, decimals: u32) -> String {
    let scale = 10i128.pow(decimals);
    let scaled = value * Rational::from_integer(100 * scale);
    let (q, r) = scaled.numer().abs().div_rem(scaled.denom());
    let rounded = if 2 * r >= *scaled.denom() { q + 1 } else { q };
    let sign = if *scaled.numer() < 0 && rounded != 0 { "-" } else { "" };
    if decimals == 0 {
        format!("{sign}{rounded}%")
    } else {
        let (int, frac) = rounded.div_rem(&scale);
        format!("{sign}{int}.{frac:0width$}%", width = decimals as usize)
    }
}

/// An exact rational with its real rendering.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Exact {
    #[serde(serialize_with = "serialize_rational")]
    pub exact: Rational,
    pub value: f64,
}

impl Exact {
    pub fn new(exact: Rational) -> Self {
        let value = to_f64(&exact);
        Self { exact, value }
    }

    pub fn percent(&self, decimals: u32) -> String {
        render_percent(&self.exact, decimals)
    }
}

/// `numerator / denominator` with the exact quotient.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rate {
    pub numerator: u64,
    pub denominator: u64,
    #[serde(flatten)]
    pub ratio: Exact,
}

impl Rate {
    pub fn new(numerator: u64, denominator: u64, what: &'static str) -> Result<Self> {
        if denominator == 0 {
            return Err(Error::ZeroDenominator(what));
        }
        Ok(Self {
            numerator,
            denominator,
            ratio: Exact::new(Rational::new(numerator.into(), denominator.into())),
        })
    }

    pub fn value(&self) -> f64 {
        self.ratio.value
    }

    pub fn exact(&self) -> Rational {
        self.ratio.exact
    }

    pub fn percent(&self, decimals: u32) -> String {
        self.ratio.percent(decimals)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Rates {
    pub cfr: Rate,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ifr: Option<Rate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detection: Option<Rate>,
}

pub fn rates(region: &RegionCounts) -> Result<Rates> {
    let cfr = Rate::new(region.deaths, region.confirmed, "case fatality rate needs confirmed > 0")?;
    let (ifr, detection) = match region.true_infections {
        Some(t) => (
            Some(Rate::new(region.deaths, t, "infection fatality rate needs true_infections > 0")?),
            Some(Rate::new(region.confirmed, t, "detection rate needs true_infections > 0")?),
        ),
        None => (None, None),
    };
    Ok(Rates { cfr, ifr, detection })
}

/// A national infection estimate: exact, rounded down, and as a real.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Estimate {
    #[serde(serialize_with = "serialize_rational")]
    pub exact: Rational,
    pub floor: i128,
    pub value: f64,
}

impl Estimate {
    fn new(exact: Rational) -> Self {
        Self { floor: exact.floor().to_integer(), value: to_f64(&exact), exact }
    }
}

/// National infections assuming the local infection fatality rate carries
/// over: `infections_local · deaths_national / deaths_local`.
pub fn extrapolate_by_ifr(local: &RegionCounts, national: &RegionCounts) -> Result<Estimate> {
    let infections = local.infections()?;
    if local.deaths == 0 {
        return Err(Error::ZeroDenominator("IFR extrapolation needs local deaths > 0"));
    }
    Ok(Estimate::new(Rational::new(
        i128::from(infections) * i128::from(national.deaths),
        local.deaths.into(),
    )))
}

/// National infections assuming the local detection rate carries over:
/// `infections_local · confirmed_national / confirmed_local`.
pub fn extrapolate_by_undercount(local: &RegionCounts, national: &RegionCounts) -> Result<Estimate> {
    let infections = local.infections()?;
    if local.confirmed == 0 {
        return Err(Error::ZeroDenominator("undercount extrapolation needs local confirmed > 0"));
    }
    Ok(Estimate::new(Rational::new(
        i128::from(infections) * i128::from(national.confirmed),
        local.confirmed.into(),
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OverdeterminationReport {
    pub local: RegionCounts,
    pub national: RegionCounts,
    pub local_rates: Rates,
    pub national_rates: Rates,
    pub by_ifr: Estimate,
    pub by_undercount: Estimate,
    /// `by_ifr / by_undercount`, equal to `cfr_national / cfr_local`.
    pub ratio: Exact,
    pub implied_national_ifr_by_ifr: Exact,
    pub implied_national_ifr_by_undercount: Exact,
    pub implied_national_detection_by_ifr: Exact,
    pub implied_national_detection_by_undercount: Exact,
    /// Local deaths out of local confirmed cases against the national CFR.
    pub local_vs_national_cfr: TestResult,
    pub caveat: &'static str,
    pub warnings: Vec<String>,
}

pub fn overdetermination_report(
    local: &RegionCounts,
    national: &RegionCounts,
    convention: TwoSidedConvention,
) -> Result<OverdeterminationReport> {
    let by_ifr = extrapolate_by_ifr(local, national)?;
    let by_undercount = extrapolate_by_undercount(local, national)?;
    if by_undercount.exact == Rational::from_integer(0) || by_ifr.exact == Rational::from_integer(0) {
        return Err(Error::ZeroDenominator("implied national rates need nonzero national counts"));
    }
    let local_rates = rates(local)?;
    let national_rates = rates(national)?;
    let nat_deaths = Rational::from_integer(national.deaths.into());
    let nat_confirmed = Rational::from_integer(national.confirmed.into());
    let test = exact_binomial_test(
        CountSample::new(local.deaths, local.confirmed)?,
        national_rates.cfr.value(),
        convention,
    )?;
    let mut warnings = local.warnings();
    warnings.extend(national.warnings());
    Ok(OverdeterminationReport {
        ratio: Exact::new(by_ifr.exact / by_undercount.exact),
        implied_national_ifr_by_ifr: Exact::new(nat_deaths / by_ifr.exact),
        implied_national_ifr_by_undercount: Exact::new(nat_deaths / by_undercount.exact),
        implied_national_detection_by_ifr: Exact::new(nat_confirmed / by_ifr.exact),
        implied_national_detection_by_undercount: Exact::new(nat_confirmed / by_undercount.exact),
        local: local.clone(),
        national: national.clone(),
        local_rates,
        national_rates,
        by_ifr,
        by_undercount,
        local_vs_national_cfr: test,
        caveat: NO_DEMOGRAPHIC_ADJUSTMENT,
        warnings,
    })
}

/// An interval of estimates with the assumption behind each endpoint.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IdInterval {
    pub low: f64,
    pub high: f64,
    pub low_source: String,
    pub high_source: String,
}

/// Bounds on the expected local death count used to propagate sampling
/// uncertainty through the IFR extrapolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DeathBounds {
    /// Real-valued equal-tail Poisson interval.
    EqualTail,
    /// Integer means not rejected under the given convention.
    IntegerGrid { convention: TwoSidedConvention },
    /// Fixed integer endpoints.
    Fixed { low: u64, high: u64 },
}

impl DeathBounds {
    /// The integer range 4..=16 published for the Gangelt count of 8.
    pub const GANGELT_PUBLISHED: DeathBounds = DeathBounds::Fixed { low: 4, high: 16 };

    fn resolve(self, deaths: u64, level: f64) -> Result<(Rational, Rational, String)> {
        match self {
            DeathBounds::EqualTail => {
                let ci = poisson_mean_ci_equal_tail(deaths, level)?;
                let lo = Rational::approximate_float(ci.low)
                    .ok_or_else(|| Error::domain("equal-tail bound not representable"))?;
                let hi = Rational::approximate_float(ci.high)
                    .ok_or_else(|| Error::domain("equal-tail bound not representable"))?;
                Ok((lo, hi, "equal-tail Poisson".to_string()))
            }
            DeathBounds::IntegerGrid { convention } => {
                let ci = poisson_mean_ci_integer(deaths, level, convention)?;
                let (lo, hi) = ci
                    .low()
                    .zip(ci.high())
                    .ok_or_else(|| Error::domain("integer-grid interval is empty"))?;
                Ok((int(lo), int(hi), format!("integer-grid Poisson ({convention})")))
            }
            DeathBounds::Fixed { low, high } => {
                if low > high {
                    return Err(Error::domain(format!("fixed bounds reversed: {low} > {high}")));
                }
                Ok((int(low), int(high), "fixed integer bounds".to_string()))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrevalenceIntervals {
    /// Between the two point extrapolations.
    pub assumption_range: IdInterval,
    /// IFR extrapolation evaluated across the bounds on expected local deaths.
    pub sampling_range: IdInterval,
}

pub fn prevalence_interval(
    local: &RegionCounts,
    national: &RegionCounts,
    level: f64,
    bounds: DeathBounds,
) -> Result<PrevalenceIntervals> {
    let by_ifr = extrapolate_by_ifr(local, national)?;
    let by_undercount = extrapolate_by_undercount(local, national)?;
    let ifr_label = "constant infection fatality rate".to_string();
    let detection_label = "constant detection rate".to_string();
    let assumption_range = if by_ifr.floor <= by_undercount.floor {
        IdInterval {
            low: by_ifr.floor as f64,
            high: by_undercount.floor as f64,
            low_source: ifr_label,
            high_source: detection_label,
        }
    } else {
        IdInterval {
            low: by_undercount.floor as f64,
            high: by_ifr.floor as f64,
            low_source: detection_label,
            high_source: ifr_label,
        }
    };

    let (lam_lo, lam_hi, how) = bounds.resolve(local.deaths, level)?;
    if lam_lo <= Rational::from_integer(0) {
        return Err(Error::ZeroDenominator("lower bound on expected deaths is zero"));
    }
    let numerator = Rational::from_integer(
        i128::from(local.infections()?) * i128::from(national.deaths),
    );
    let sampling_range = IdInterval {
        low: to_f64(&(numerator / lam_hi)),
        high: to_f64(&(numerator / lam_lo)),
        low_source: format!("IFR route at upper bound on expected local deaths, {how} ({})", to_f64(&lam_hi)),
        high_source: format!("IFR route at lower bound on expected local deaths, {how} ({})", to_f64(&lam_lo)),
    };
    Ok(PrevalenceIntervals { assumption_range, sampling_range })
}
