//! The two embedded case studies: a viral-load comparison by age group and a
//! seroprevalence extrapolation from one town to a country.
//!
//! Each study is a frozen fixture plus a list of expected quantities. Running
//! a study recomputes everything from the fixture and compares each expected
//! entry against the computed value with the same label.

use std::fmt::{self, Write as _};
use std::str::FromStr;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::exact::{
    exact_binomial_test, poisson_mean_ci_equal_tail, poisson_mean_ci_integer, CountSample,
    TwoSidedConvention,
};
use crate::extrapolation::{
    overdetermination_report, prevalence_interval, rates, render_percent, DeathBounds, Rate,
    Rational, RegionCounts,
};
use crate::json::{format_float, to_stable_string};
use crate::multiplicity::pair_count;
use crate::summary::{ci_to_se, pool_bins, two_sample_z_test, BinSummary, DEFAULT_LEVEL};

/// Significance level used for verdicts in the reports.
pub const ALPHA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Study {
    Charite,
    Gangelt,
}

impl Study {
    pub const ALL: [Study; 2] = [Study::Charite, Study::Gangelt];

    pub fn as_str(self) -> &'static str {
        match self {
            Study::Charite => "charite",
            Study::Gangelt => "gangelt",
        }
    }
}

impl fmt::Display for Study {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Study {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "charite" => Ok(Study::Charite),
            "gangelt" => Ok(Study::Gangelt),
            other => Err(Error::Parse(format!("unknown study '{other}' (expected charite or gangelt)"))),
        }
    }
}

/// Whether an expected value must be matched or is only recorded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Reproduce,
    DocumentDiscrepancy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Target {
    Near { value: f64, tolerance: f64 },
    Range { low: f64, high: f64 },
    Exact { value: f64 },
    Text { value: String },
}

impl Target {
    fn near(value: f64, tolerance: f64) -> Self {
        Target::Near { value, tolerance }
    }

    fn exact(value: f64) -> Self {
        Target::Exact { value }
    }

    fn text(value: &str) -> Self {
        Target::Text { value: value.to_string() }
    }

    fn matches(&self, computed: &Value) -> bool {
        match (self, computed) {
            (Target::Text { value }, Value::String(s)) => s == value,
            (Target::Near { value, tolerance }, Value::Number(n)) => {
                n.as_f64().is_some_and(|c| (c - value).abs() <= *tolerance)
            }
            (Target::Range { low, high }, Value::Number(n)) => {
                n.as_f64().is_some_and(|c| *low <= c && c <= *high)
            }
            (Target::Exact { value }, Value::Number(n)) => n.as_f64() == Some(*value),
            _ => false,
        }
    }

    fn describe(&self) -> String {
        match self {
            Target::Near { value, tolerance } => format!("{} ± {}", format_float(*value), format_float(*tolerance)),
            Target::Range { low, high } => format!("[{}, {}]", format_float(*low), format_float(*high)),
            Target::Exact { value } => format!("= {}", format_float(*value)),
            Target::Text { value } => format!("\"{value}\""),
        }
    }
}

/// A published quantity and how the recomputation is judged against it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Expected {
    pub label: String,
    pub target: Target,
    /// Where the published value comes from, in words.
    pub source: String,
    pub status: Status,
}

impl Expected {
    fn new(label: &str, target: Target, source: &str, status: Status) -> Self {
        Self { label: label.to_string(), target, source: source.to_string(), status }
    }
}

/// A frozen study: its inputs and the published values to check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseStudy {
    pub id: Study,
    pub inputs: Value,
    pub expected: Vec<Expected>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Computed {
    pub label: String,
    pub value: Value,
    pub method: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Pass,
    Fail,
    /// A recorded discrepancy that the recomputation does not reproduce.
    Discrepancy,
    /// A recorded discrepancy that this convention happens to reproduce.
    Agrees,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub label: String,
    pub computed: Value,
    pub target: Target,
    pub source: String,
    pub status: Status,
    pub outcome: Outcome,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub version: &'static str,
    pub convention: TwoSidedConvention,
    pub level: f64,
    pub percent_rounding: &'static str,
    pub float_digits: usize,
    /// Seconds since the Unix epoch; absent in deterministic mode.
    pub timestamp: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReanalysisReport {
    pub study: Study,
    pub inputs: Value,
    pub computed: Vec<Computed>,
    pub comparisons: Vec<Comparison>,
    pub notes: Vec<String>,
    pub details: Value,
    pub metadata: Metadata,
}

impl ReanalysisReport {
    /// True when every reproduce-status entry passes.
    pub fn all_reproduced(&self) -> bool {
        self.comparisons.iter().all(|c| c.outcome != Outcome::Fail)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Comparison> {
        self.comparisons.iter().filter(|c| c.outcome == Outcome::Fail)
    }

    pub fn computed_value(&self, label: &str) -> Option<&Value> {
        self.computed.iter().find(|c| c.label == label).map(|c| &c.value)
    }

    pub fn comparison(&self, label: &str) -> Option<&Comparison> {
        self.comparisons.iter().find(|c| c.label == label)
    }

    /// Appends comparisons for additional expected entries, e.g. values
    /// published elsewhere for the same inputs.
    pub fn add_targets(&mut self, extra: &[Expected]) {
        let new = compare(extra, &self.computed);
        self.comparisons.extend(new);
    }

    pub fn to_json(&self) -> Result<String> {
        to_stable_string(self)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "study: {}", self.study);
        let _ = writeln!(out, "convention: {}", self.metadata.convention);
        let _ = writeln!(out, "\ncomputed:");
        let width = self.computed.iter().map(|c| c.label.len()).max().unwrap_or(0);
        for c in &self.computed {
            let _ = writeln!(out, "  {:<width$} {:>18}  [{}]", c.label, value_text(&c.value), c.method);
        }
        let _ = writeln!(out, "\ncomparisons:");
        for c in &self.comparisons {
            let tag = match c.outcome {
                Outcome::Pass => "PASS",
                Outcome::Fail => "FAIL",
                Outcome::Discrepancy => "DISCREPANCY",
                Outcome::Agrees => "AGREES",
            };
            let _ = writeln!(
                out,
                "  {tag:<11} {}: computed {} vs published {} ({})",
                c.label,
                value_text(&c.computed),
                c.target.describe(),
                c.source
            );
        }
        if !self.notes.is_empty() {
            let _ = writeln!(out, "\nnotes:");
            for n in &self.notes {
                let _ = writeln!(out, "  - {n}");
            }
        }
        out
    }
}

fn value_text(v: &Value) -> String {
    match v {
        Value::Number(n) => n.as_f64().map_or_else(|| n.to_string(), format_float),
        Value::String(s) => s.clone(),
        Value::Null => "missing".to_string(),
        other => other.to_string(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReportOptions {
    pub convention: TwoSidedConvention,
    /// Suppresses the timestamp so output is byte-stable.
    pub deterministic: bool,
}

impl Default for ReportOptions {
    fn default() -> Self {
        Self { convention: TwoSidedConvention::default(), deterministic: true }
    }
}

#[derive(Default)]
struct Collector {
    computed: Vec<Computed>,
}

impl Collector {
    fn num(&mut self, label: &str, value: f64, method: &str) {
        self.push(label, json!(value), method);
    }

    fn int(&mut self, label: &str, value: i128, method: &str) {
        // Exact integers are stored as floats so they compare with Target::Exact.
        self.push(label, json!(value as f64), method);
    }

    fn text(&mut self, label: &str, value: String, method: &str) {
        self.push(label, Value::String(value), method);
    }

    fn push(&mut self, label: &str, value: Value, method: &str) {
        debug_assert!(self.computed.iter().all(|c| c.label != label), "duplicate label {label}");
        self.computed.push(Computed { label: label.to_string(), value, method: method.to_string() });
    }

    fn rate(&mut self, label: &str, rate: &Rate, decimals: u32) {
        self.num(label, rate.value(), "exact rational");
        self.text(&format!("{label}_percent"), rate.percent(decimals), "exact rational, half away from zero");
    }
}

fn compare(expected: &[Expected], computed: &[Computed]) -> Vec<Comparison> {
    expected
        .iter()
        .map(|e| {
            let value = computed
                .iter()
                .find(|c| c.label == e.label)
                .map_or(Value::Null, |c| c.value.clone());
            let ok = e.target.matches(&value);
            let outcome = match (e.status, ok) {
                (Status::Reproduce, true) => Outcome::Pass,
                (Status::Reproduce, false) => Outcome::Fail,
                (Status::DocumentDiscrepancy, true) => Outcome::Agrees,
                (Status::DocumentDiscrepancy, false) => Outcome::Discrepancy,
            };
            Comparison {
                label: e.label.clone(),
                computed: value,
                target: e.target.clone(),
                source: e.source.clone(),
                status: e.status,
                outcome,
            }
        })
        .collect()
}

fn metadata(options: &ReportOptions) -> Metadata {
    let timestamp = if options.deterministic {
        None
    } else {
        SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs())
    };
    Metadata {
        version: env!("CARGO_PKG_VERSION"),
        convention: options.convention,
        level: DEFAULT_LEVEL,
        percent_rounding: "half-away-from-zero",
        float_digits: crate::json::SIGNIFICANT_DIGITS,
        timestamp,
    }
}

const CHARITE_BINS: usize = 10;
const CHARITE_SMALLEST_BIN: u64 = 17;

fn charite_bins() -> (BinSummary, BinSummary) {
    (
        BinSummary { label: "two youngest age bins".into(), n: 127, mean: 4.74, ci_low: 4.42, ci_high: 5.05, level: DEFAULT_LEVEL },
        BinSummary { label: "remaining eight age bins".into(), n: 3585, mean: 5.21, ci_low: 5.15, ci_high: 5.27, level: DEFAULT_LEVEL },
    )
}

/// Pooled viral-load groups and the published p-values.
pub fn charite_case() -> CaseStudy {
    use Status::*;
    let (young, old) = charite_bins();
    let z_source = "pooled two-sample test, normal critical values";
    CaseStudy {
        id: Study::Charite,
        inputs: json!({
            "young": young,
            "old": old,
            "bins": CHARITE_BINS,
            "smallest_bin_n": CHARITE_SMALLEST_BIN,
        }),
        expected: vec![
            Expected::new("p_two_sided", Target::Range { low: 0.0035, high: 0.0045 }, z_source, Reproduce),
            Expected::new("p_two_sided_percent", Target::text("0.4%"), z_source, Reproduce),
            Expected::new("p_one_sided", Target::Range { low: 0.0017, high: 0.0023 }, "one-sided variant of the pooled test", Reproduce),
            Expected::new("p_one_sided_percent", Target::text("0.2%"), "one-sided variant of the pooled test", Reproduce),
            Expected::new("pairwise_comparisons", Target::exact(45.0), "pairwise comparisons among ten age bins", Reproduce),
            Expected::new("comparisons_involving_smallest_bin", Target::exact(9.0), "tests involving the oldest bin", Reproduce),
            Expected::new("bonferroni_45", Target::Range { low: 0.16, high: 0.21 }, "pooled p-value scaled by the 45-way family size", Reproduce),
            Expected::new("bonferroni_45_verdict", Target::text("not significant"), "pooled p-value scaled by the 45-way family size", Reproduce),
        ],
    }
}

pub fn run_charite(options: &ReportOptions) -> Result<ReanalysisReport> {
    let case = charite_case();
    let (young, old) = charite_bins();
    let mut c = Collector::default();

    let se_young = ci_to_se(young.ci_low, young.ci_high, young.level)?;
    let se_old = ci_to_se(old.ci_low, old.ci_high, old.level)?;
    c.num("se_young", se_young, "half-width / z_0.975");
    c.num("se_old", se_old, "half-width / z_0.975");

    let a = pool_bins(std::slice::from_ref(&young))?;
    let b = pool_bins(std::slice::from_ref(&old))?;
    let test = two_sample_z_test(&a, &b)?;
    let p_two = test.p_two_sided;
    let p_one = test.p_one_sided_low.unwrap_or(f64::NAN);
    c.num("z", test.statistic, "two-sample z");
    c.num("p_two_sided", p_two, "two-sample z");
    c.text("p_two_sided_percent", percent_of(p_two, 1), "two-sample z, half away from zero");
    c.num("p_one_sided", p_one, "two-sample z, lower tail");
    c.text("p_one_sided_percent", percent_of(p_one, 1), "two-sample z, half away from zero");

    let pairs = pair_count(CHARITE_BINS);
    c.int("pairwise_comparisons", pairs as i128, "C(10, 2)");
    c.int("comparisons_involving_smallest_bin", (CHARITE_BINS - 1) as i128, "bins - 1");
    c.int("smallest_bin_n", i128::from(CHARITE_SMALLEST_BIN), "fixture");
    let bonferroni = (pairs as f64 * p_two).min(1.0);
    c.num("bonferroni_45", bonferroni, "min(1, 45 p)");
    let verdict = if bonferroni <= ALPHA { "significant" } else { "not significant" };
    c.text("bonferroni_45_verdict", verdict.to_string(), "compared with 0.05");

    let notes = vec![
        format!(
            "after 45-way Bonferroni adjustment the pooled comparison is {verdict} at 5% (adjusted p = {})",
            format_float(bonferroni)
        ),
        format!(
            "{} of the {pairs} pairwise tests involve the bin with {CHARITE_SMALLEST_BIN} observations, \
             where normal approximations at Bonferroni-scale quantiles are least reliable",
            CHARITE_BINS - 1
        ),
        "the omnibus rank test on the original raw data cannot be recomputed from summaries".to_string(),
    ];

    Ok(ReanalysisReport {
        study: Study::Charite,
        comparisons: compare(&case.expected, &c.computed),
        inputs: case.inputs,
        computed: c.computed,
        notes,
        details: json!({ "pooled_test": test }),
        metadata: metadata(options),
    })
}

fn percent_of(p: f64, decimals: u32) -> String {
    match Rational::approximate_float(p) {
        Some(r) => render_percent(&r, decimals),
        None => "NaN".to_string(),
    }
}

const GANGELT_CONFIRMED: u64 = 388;
const GANGELT_INFECTIONS: u64 = 1956;

pub fn gangelt_region(fatalities: u64) -> RegionCounts {
    RegionCounts::new("Gangelt", fatalities, GANGELT_CONFIRMED, Some(GANGELT_INFECTIONS))
}

pub fn germany_region() -> RegionCounts {
    RegionCounts::new("Germany", 7928, 174_975, None)
}

/// Town-to-country extrapolation. Fatality-specific targets exist for 8
/// (the count used in the headline arithmetic) and 9 (the later count).
pub fn gangelt_case(fatalities: u64) -> CaseStudy {
    use Status::*;
    let local = gangelt_region(fatalities);
    let national = germany_region();
    let mut expected = vec![
        Expected::new("by_undercount_floor", Target::exact(882_090.0), "rule of proportions, confirmed-case ratio", Reproduce),
        Expected::new("national_cfr_percent", Target::text("4.5%"), "national crude case fatality rate", Reproduce),
        Expected::new("detection_rate_percent", Target::text("20%"), "local discovery rate", Reproduce),
    ];
    match fatalities {
        8 => expected.extend([
            Expected::new("by_ifr_floor", Target::exact(1_938_396.0), "rule of proportions, fatality ratio", Reproduce),
            Expected::new("local_cfr_percent", Target::text("2.1%"), "local crude case fatality rate", Reproduce),
            Expected::new("local_ifr_percent", Target::text("0.4%"), "local infection fatality rate", Reproduce),
            Expected::new("implied_national_ifr_by_undercount_percent", Target::text("0.9%"), "national IFR implied by extrapolating the undercount", Reproduce),
            Expected::new("implied_national_detection_by_ifr_percent", Target::text("10%"), "national detection implied by extrapolating the IFR", DocumentDiscrepancy),
            Expected::new("poisson_equal_tail_low", Target::near(3.454, 0.01), "equal-tail Poisson interval, computed oracle", Reproduce),
            Expected::new("poisson_equal_tail_high", Target::near(15.763, 0.01), "equal-tail Poisson interval, computed oracle", Reproduce),
            Expected::new("poisson_integer_low", Target::exact(4.0), "integers covered by the Poisson interval", Reproduce),
            Expected::new("poisson_integer_high.double-one-sided", Target::exact(16.0), "integers covered by the Poisson interval", DocumentDiscrepancy),
            Expected::new("poisson_integer_high.minimum-likelihood", Target::exact(16.0), "integers covered by the Poisson interval", DocumentDiscrepancy),
            Expected::new("poisson_integer_high.central-distance", Target::exact(16.0), "integers covered by the Poisson interval", DocumentDiscrepancy),
            Expected::new("p_two_sided", Target::near(0.026, 0.0005), "exact binomial test of the local sample against the national urn", DocumentDiscrepancy),
            Expected::new("assumption_range_low", Target::exact(882_090.0), "the two point extrapolations", Reproduce),
            Expected::new("assumption_range_high", Target::exact(1_938_396.0), "the two point extrapolations", Reproduce),
            Expected::new("sampling_range_published_low", Target::exact(969_198.0), "IFR extrapolation over expected deaths 4 to 16", Reproduce),
            Expected::new("sampling_range_published_high", Target::exact(3_876_792.0), "IFR extrapolation over expected deaths 4 to 16", Reproduce),
        ]),
        9 => expected.push(Expected::new(
            "p_two_sided",
            Target::near(0.052, 0.0005),
            "exact binomial test after the fatality count rose to 9",
            DocumentDiscrepancy,
        )),
        _ => {}
    }
    CaseStudy { id: Study::Gangelt, inputs: json!({ "local": local, "national": national }), expected }
}

pub fn run_gangelt(fatalities: u64, options: &ReportOptions) -> Result<ReanalysisReport> {
    if fatalities == 0 || fatalities > GANGELT_CONFIRMED {
        return Err(Error::domain(format!(
            "fatalities must lie in 1..={GANGELT_CONFIRMED}, got {fatalities}"
        )));
    }
    let case = gangelt_case(fatalities);
    let local = gangelt_region(fatalities);
    let national = germany_region();
    let convention = options.convention;
    let mut c = Collector::default();

    let local_rates = rates(&local)?;
    let national_rates = rates(&national)?;
    c.rate("local_cfr", &local_rates.cfr, 1);
    c.rate("national_cfr", &national_rates.cfr, 1);
    if let (Some(ifr), Some(det)) = (&local_rates.ifr, &local_rates.detection) {
        c.rate("local_ifr", ifr, 1);
        c.rate("detection_rate", det, 0);
    }

    let report = overdetermination_report(&local, &national, convention)?;
    c.num("by_ifr", report.by_ifr.value, "exact rational");
    c.int("by_ifr_floor", report.by_ifr.floor, "exact rational, floor");
    c.num("by_undercount", report.by_undercount.value, "exact rational");
    c.int("by_undercount_floor", report.by_undercount.floor, "exact rational, floor");
    c.num("extrapolation_ratio", report.ratio.value, "exact rational");
    let implied = [
        ("implied_national_ifr_by_ifr", &report.implied_national_ifr_by_ifr, 1),
        ("implied_national_ifr_by_undercount", &report.implied_national_ifr_by_undercount, 1),
        ("implied_national_detection_by_ifr", &report.implied_national_detection_by_ifr, 0),
        ("implied_national_detection_by_undercount", &report.implied_national_detection_by_undercount, 0),
    ];
    for (label, exact, decimals) in implied {
        c.num(label, exact.value, "exact rational");
        c.text(&format!("{label}_percent"), exact.percent(decimals), "exact rational, half away from zero");
    }

    let sample = CountSample::new(local.deaths, local.confirmed)?;
    let p0 = national_rates.cfr.value();
    let mut binomial = serde_json::Map::new();
    for conv in TwoSidedConvention::ALL {
        let t = exact_binomial_test(sample, p0, conv)?;
        c.num(&format!("p_two_sided.{conv}"), t.p_two_sided, "exact binomial");
        binomial.insert(conv.to_string(), serde_json::to_value(&t).unwrap_or(Value::Null));
    }
    let selected = exact_binomial_test(sample, p0, convention)?;
    c.num("p_two_sided", selected.p_two_sided, &format!("exact binomial, {convention}"));
    c.text("p_two_sided_percent", percent_of(selected.p_two_sided, 1), "exact binomial, half away from zero");
    c.num("p_one_sided_low", selected.p_one_sided_low.unwrap_or(f64::NAN), "exact binomial, lower tail");

    let garwood = poisson_mean_ci_equal_tail(local.deaths, DEFAULT_LEVEL)?;
    c.num("poisson_equal_tail_low", garwood.low, "chi-square inversion");
    c.num("poisson_equal_tail_high", garwood.high, "chi-square inversion");
    let mut grids = serde_json::Map::new();
    for conv in TwoSidedConvention::ALL {
        let ci = poisson_mean_ci_integer(local.deaths, DEFAULT_LEVEL, conv)?;
        let method = format!("integer grid, {conv}");
        let low = ci.low().map_or(-1, i128::from);
        let high = ci.high().map_or(-1, i128::from);
        c.int(&format!("poisson_integer_low.{conv}"), low, &method);
        c.int(&format!("poisson_integer_high.{conv}"), high, &method);
        if conv == convention {
            c.int("poisson_integer_low", low, &method);
            c.int("poisson_integer_high", high, &method);
        }
        grids.insert(conv.to_string(), serde_json::to_value(&ci).unwrap_or(Value::Null));
    }

    let published = prevalence_interval(&local, &national, DEFAULT_LEVEL, DeathBounds::GANGELT_PUBLISHED)?;
    let equal_tail = prevalence_interval(&local, &national, DEFAULT_LEVEL, DeathBounds::EqualTail)?;
    c.num("assumption_range_low", published.assumption_range.low, "floored point extrapolations");
    c.num("assumption_range_high", published.assumption_range.high, "floored point extrapolations");
    c.num("sampling_range_published_low", published.sampling_range.low, "exact rational, expected deaths 16");
    c.num("sampling_range_published_high", published.sampling_range.high, "exact rational, expected deaths 4");
    c.num("sampling_range_equal_tail_low", equal_tail.sampling_range.low, "equal-tail upper bound on expected deaths");
    c.num("sampling_range_equal_tail_high", equal_tail.sampling_range.high, "equal-tail lower bound on expected deaths");

    let mut notes = vec![
        format!(
            "the two extrapolations differ by the factor {} because local and national crude CFRs differ",
            format_float(report.ratio.value)
        ),
        format!(
            "integer-grid upper endpoint depends on the two-sided convention; the selected convention ({convention}) gives {}",
            c.computed
                .iter()
                .find(|x| x.label == "poisson_integer_high")
                .map_or_else(String::new, |x| value_text(&x.value))
        ),
        report.caveat.to_string(),
    ];
    notes.extend(report.warnings.iter().cloned());

    Ok(ReanalysisReport {
        study: Study::Gangelt,
        comparisons: compare(&case.expected, &c.computed),
        inputs: case.inputs,
        computed: c.computed,
        notes,
        details: json!({
            "overdetermination": report,
            "binomial_tests": binomial,
            "poisson_equal_tail": garwood,
            "poisson_integer_grids": grids,
            "prevalence_published_bounds": published,
            "prevalence_equal_tail": equal_tail,
        }),
        metadata: metadata(options),
    })
}

pub fn run_study(study: Study, fatalities: u64, options: &ReportOptions) -> Result<ReanalysisReport> {
    match study {
        Study::Charite => run_charite(options),
        Study::Gangelt => run_gangelt(fatalities, options),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn opts() -> ReportOptions {
        ReportOptions::default()
    }

    #[test]
    fn charite_reproduces() {
        let r = run_charite(&opts()).unwrap();
        assert!(r.all_reproduced(), "{}", r.to_text());
        let p = r.computed_value("p_two_sided").unwrap().as_f64().unwrap();
        assert!((p - 0.004_07).abs() < 5e-5);
    }

    #[test]
    fn every_expected_entry_compared_once() {
        for report in [
            run_charite(&opts()).unwrap(),
            run_gangelt(8, &opts()).unwrap(),
            run_gangelt(9, &opts()).unwrap(),
        ] {
            let case = match report.study {
                Study::Charite => charite_case(),
                Study::Gangelt => gangelt_case(report.inputs["local"]["deaths"].as_u64().unwrap()),
            };
            assert_eq!(case.expected.len(), report.comparisons.len());
            for e in &case.expected {
                assert_eq!(report.comparisons.iter().filter(|c| c.label == e.label).count(), 1);
                assert!(report.computed_value(&e.label).is_some(), "no computed value for {}", e.label);
                assert!(!e.source.is_empty());
            }
        }
    }

    #[test]
    fn gangelt_outcomes() {
        let r = run_gangelt(8, &opts()).unwrap();
        assert!(r.all_reproduced(), "{}", r.to_text());
        let outcome = |l: &str| r.comparison(l).unwrap().outcome;
        assert_eq!(outcome("p_two_sided"), Outcome::Discrepancy);
        assert_eq!(outcome("poisson_integer_high.minimum-likelihood"), Outcome::Discrepancy);
        assert_eq!(outcome("poisson_integer_high.central-distance"), Outcome::Agrees);
        assert_eq!(outcome("implied_national_detection_by_ifr_percent"), Outcome::Discrepancy);

        let r9 = run_gangelt(9, &opts()).unwrap();
        assert!(r9.all_reproduced());
        assert!(r9.comparison("p_two_sided").is_some());
    }

    #[test]
    fn deterministic_output_is_byte_stable() {
        let a = run_gangelt(8, &opts()).unwrap().to_json().unwrap();
        let b = run_gangelt(8, &opts()).unwrap().to_json().unwrap();
        assert_eq!(a, b);
        assert!(a.contains("\"timestamp\": null"));
        let live = run_charite(&ReportOptions { deterministic: false, ..opts() }).unwrap();
        assert!(live.metadata.timestamp.is_some());
    }

    #[test]
    fn failing_target_is_reported() {
        let expected = vec![Expected::new("x", Target::exact(1.0), "test", Status::Reproduce)];
        let computed = vec![Computed { label: "x".into(), value: json!(2.0), method: "m".into() }];
        assert_eq!(compare(&expected, &computed)[0].outcome, Outcome::Fail);
        assert_eq!(compare(&expected, &[])[0].outcome, Outcome::Fail);

        let mut r = run_charite(&opts()).unwrap();
        r.add_targets(&[Expected::new("z", Target::near(-2.87, 0.01), "extra", Status::Reproduce)]);
        assert!(r.all_reproduced());
        r.add_targets(&expected);
        assert!(!r.all_reproduced());
        assert_eq!(r.failures().count(), 1);
    }

    #[test]
    fn study_names_round_trip() {
        for s in Study::ALL {
            assert_eq!(s.as_str().parse::<Study>().unwrap(), s);
        }
        assert!("bogus".parse::<Study>().is_err());
        assert!(run_gangelt(0, &opts()).is_err());
    }
}
