//! Monte Carlo harness for power, size and coverage.
//!
//! Every replication draws from its own ChaCha8 stream keyed by
//! `(seed, replication index)`, and outcomes are reduced as integer counts in
//! index order, so results do not depend on the number of worker threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{normal_cdf, normal_quantile};
use crate::error::{Error, Result};
use crate::exact::{binomial_proportion_ci, poisson_mean_ci_equal_tail, CountSample};
use crate::multiplicity::{adjust_values, AdjustMethod};

pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_REPLICATIONS: u64 = 10_000;

/// Standardized (mean 0, variance 1) error distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum Family {
    Normal,
    /// `exp(sigma Z)`, centred and scaled.
    LogNormal { sigma: f64 },
}

impl Family {
    fn validate(self) -> Result<()> {
        match self {
            Family::Normal => Ok(()),
            Family::LogNormal { sigma } if sigma > 0.0 && sigma.is_finite() => Ok(()),
            Family::LogNormal { sigma } => Err(invalid(format!("log-normal sigma must be > 0, got {sigma}"))),
        }
    }

    fn draw<R: Rng>(self, rng: &mut R) -> f64 {
        let z: f64 = StandardNormal.sample(rng);
        match self {
            Family::Normal => z,
            Family::LogNormal { sigma } => {
                let s2 = sigma * sigma;
                let mean = (0.5 * s2).exp();
                let sd = ((s2.exp() - 1.0) * s2.exp()).sqrt();
                ((sigma * z).exp() - mean) / sd
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EffectShape {
    /// The first `young_bins` bins sit `effect` below the rest.
    Step,
    /// Means rise linearly by `effect` from the first bin to the last.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerScenario {
    pub bin_sizes: Vec<u64>,
    pub young_bins: usize,
    pub sd: f64,
    pub effect: f64,
    pub shape: EffectShape,
    pub family: Family,
    pub level: f64,
    pub adjustment: AdjustMethod,
}

impl Default for PowerScenario {
    /// Ten bins with the case-study group sizes 127 and 3585; the split of
    /// each group across bins is illustrative.
    fn default() -> Self {
        Self {
            bin_sizes: vec![49, 78, 300, 500, 600, 700, 650, 500, 318, 17],
            young_bins: 2,
            sd: 1.82,
            effect: 0.47,
            shape: EffectShape::Step,
            family: Family::Normal,
            level: 0.05,
            adjustment: AdjustMethod::Holm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmallCellScenario {
    pub cell_size: u64,
    pub family: Family,
    pub alpha: f64,
    pub family_size: u32,
}

impl Default for SmallCellScenario {
    fn default() -> Self {
        Self { cell_size: 17, family: Family::LogNormal { sigma: 0.5 }, alpha: 0.05, family_size: 45 }
    }
}

impl SmallCellScenario {
    pub fn test_level(&self) -> f64 {
        self.alpha / f64::from(self.family_size)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SizeWeight {
    pub size: u32,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterScenario {
    pub households: u64,
    pub household_sizes: Vec<SizeWeight>,
    pub infection_prob: f64,
    /// Intra-household correlation of infection.
    pub infection_icc: f64,
    pub fatality_prob: f64,
    /// Intra-household correlation of fatality among the infected.
    pub fatality_icc: f64,
    pub level: f64,
}

impl Default for ClusterScenario {
    fn default() -> Self {
        Self {
            households: 2000,
            household_sizes: vec![SizeWeight { size: 4, weight: 1.0 }],
            infection_prob: 0.3,
            infection_icc: 0.5,
            fatality_prob: 0.05,
            fatality_icc: 0.5,
            level: 0.95,
        }
    }
}

impl ClusterScenario {
    /// Independent individuals at roughly the case-study scale.
    pub fn unclustered() -> Self {
        Self {
            households: 200_000,
            household_sizes: vec![SizeWeight { size: 1, weight: 1.0 }],
            infection_prob: 0.15,
            infection_icc: 0.0,
            fatality_prob: 0.0206,
            fatality_icc: 0.0,
            level: 0.95,
        }
    }

    pub fn mean_household_size(&self) -> f64 {
        let total: f64 = self.household_sizes.iter().map(|s| s.weight).sum();
        self.household_sizes.iter().map(|s| f64::from(s.size) * s.weight).sum::<f64>() / total
    }

    pub fn expected_deaths(&self) -> f64 {
        self.households as f64 * self.mean_household_size() * self.infection_prob * self.fatality_prob
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    Power(PowerScenario),
    SmallCell(SmallCellScenario),
    ClusterCoverage(ClusterScenario),
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Power(_) => "power",
            Scenario::SmallCell(_) => "small-cell",
            Scenario::ClusterCoverage(_) => "cluster-coverage",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Scenario::Power(s) => {
                if s.bin_sizes.len() < 2 {
                    return Err(invalid("power scenario needs at least two bins".into()));
                }
                if s.bin_sizes.iter().any(|&n| n < 2) {
                    return Err(invalid("every bin needs at least two observations".into()));
                }
                if s.young_bins == 0 || s.young_bins >= s.bin_sizes.len() {
                    return Err(invalid(format!(
                        "young_bins must lie in 1..{}, got {}",
                        s.bin_sizes.len(),
                        s.young_bins
                    )));
                }
                check_positive("sd", s.sd)?;
                check_finite("effect", s.effect)?;
                check_level("level", s.level)?;
                s.family.validate()
            }
            Scenario::SmallCell(s) => {
                if s.cell_size < 2 {
                    return Err(invalid("cell_size must be >= 2".into()));
                }
                if s.family_size == 0 {
                    return Err(invalid("family_size must be >= 1".into()));
                }
                check_level("alpha", s.alpha)?;
                s.family.validate()
            }
            Scenario::ClusterCoverage(s) => {
                if s.households == 0 {
                    return Err(invalid("households must be >= 1".into()));
                }
                if s.household_sizes.is_empty()
                    || s.household_sizes.iter().any(|w| w.size == 0 || !(w.weight >= 0.0) || !w.weight.is_finite())
                    || s.household_sizes.iter().all(|w| w.weight == 0.0)
                {
                    return Err(invalid("household sizes need size >= 1 and nonnegative weights with a positive total".into()));
                }
                for (name, p) in [("infection_prob", s.infection_prob), ("fatality_prob", s.fatality_prob)] {
                    if !(0.0..=1.0).contains(&p) {
                        return Err(invalid(format!("{name} must lie in [0, 1], got {p}")));
                    }
                }
                for (name, r) in [("infection_icc", s.infection_icc), ("fatality_icc", s.fatality_icc)] {
                    if !(0.0..1.0).contains(&r) {
                        return Err(invalid(format!("{name} must lie in [0, 1), got {r}")));
                    }
                }
                check_level("level", s.level)
            }
        }
    }
}

fn invalid(msg: String) -> Error {
    Error::InvalidScenario(msg)
}

fn check_positive(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be > 0, got {x}")))
    }
}

fn check_finite(name: &str, x: f64) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

fn check_level(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("{name} must lie in (0, 1), got {x}")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    pub replications: u64,
    pub scenario: Scenario,
}

impl SimConfig {
    pub fn new(seed: u64, replications: u64, scenario: Scenario) -> Self {
        Self { seed, replications, scenario }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(invalid("replications must be >= 1".into()));
        }
        self.scenario.validate()
    }
}

/// A scenario file: seed and replication count are optional so they can be
/// supplied on the command line or from the environment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub replications: Option<u64>,
    pub scenario: Scenario,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(format!("scenario file: {e}")))
    }
}

/// A simulated proportion with its Monte Carlo standard error.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimEstimate {
    pub label: String,
    pub successes: u64,
    pub value: f64,
    pub mc_se: f64,
}

impl SimEstimate {
    fn new(label: &str, successes: u64, replications: u64) -> Self {
        let value = successes as f64 / replications as f64;
        Self {
            label: label.to_string(),
            successes,
            value,
            mc_se: (value * (1.0 - value) / replications as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Reference {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimResult {
    pub estimates: Vec<SimEstimate>,
    pub references: Vec<Reference>,
    pub config: SimConfig,
}

impl SimResult {
    pub fn estimate(&self, label: &str) -> Option<&SimEstimate> {
        self.estimates.iter().find(|e| e.label == label)
    }

    pub fn reference(&self, label: &str) -> Option<f64> {
        self.references.iter().find(|r| r.label == label).map(|r| r.value)
    }
}

fn replication_rng(seed: u64, rep: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(rep);
    rng
}

/// Runs `trial` once per replication and counts each outcome slot.
fn run_replications<const K: usize, F>(config: &SimConfig, threads: Option<usize>, trial: F) -> Result<[u64; K]>
where
    F: Fn(&mut ChaCha8Rng) -> [bool; K] + Sync,
{
    let seed = config.seed;
    let work = || {
        (0..config.replications)
            .into_par_iter()
            .map(|rep| trial(&mut replication_rng(seed, rep)).map(u64::from))
            .reduce(|| [0; K], |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            })
    };
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| invalid(format!("thread pool: {e}")))?;
            Ok(pool.install(work))
        }
        None => Ok(work()),
    }
}

/// Dispatches on the scenario kind. `threads` of `None` uses the global pool.
pub fn simulate(config: &SimConfig, threads: Option<usize>) -> Result<SimResult> {
    match &config.scenario {
        Scenario::Power(_) => power_study(config, threads),
        Scenario::SmallCell(_) => small_cell_size_study(config, threads),
        Scenario::ClusterCoverage(_) => cluster_coverage_study(config, threads),
    }
}

struct Moments {
    n: f64,
    mean: f64,
    /// Sum of squared deviations from the mean.
    ss: f64,
}

impl Moments {
    fn of(xs: &[f64]) -> Self {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let ss = xs.iter().map(|x| (x - mean).powi(2)).sum();
        Self { n, mean, ss }
    }

    fn combine(parts: &[Moments]) -> Self {
        let n: f64 = parts.iter().map(|m| m.n).sum();
        let mean = parts.iter().map(|m| m.n * m.mean).sum::<f64>() / n;
        let ss = parts.iter().map(|m| m.ss + m.n * (m.mean - mean).powi(2)).sum();
        Self { n, mean, ss }
    }

    fn se(&self) -> f64 {
        (self.ss / (self.n - 1.0) / self.n).sqrt()
    }
}

fn z_p_two_sided(a: &Moments, b: &Moments) -> f64 {
    let se = a.se().hypot(b.se());
    if se == 0.0 {
        return if a.mean == b.mean { 1.0 } else { 0.0 };
    }
    (2.0 * normal_cdf(-((a.mean - b.mean) / se).abs())).min(1.0)
}

fn bin_means(s: &PowerScenario) -> Vec<f64> {
    let k = s.bin_sizes.len();
    (0..k)
        .map(|i| match s.shape {
            EffectShape::Step if i < s.young_bins => -s.effect,
            EffectShape::Step => 0.0,
            EffectShape::Linear => s.effect * i as f64 / (k - 1) as f64,
        })
        .collect()
}

/// Power of the pooled two-group z-test at known `sd` with normal data.
pub fn closed_form_pooled_power(s: &PowerScenario) -> f64 {
    let means = bin_means(s);
    let (young, old) = s.bin_sizes.split_at(s.young_bins);
    let group_mean = |sizes: &[u64], ms: &[f64]| {
        let n: u64 = sizes.iter().sum();
        (sizes.iter().zip(ms).map(|(&n, m)| n as f64 * m).sum::<f64>() / n as f64, n as f64)
    };
    let (m_young, n_young) = group_mean(young, &means[..s.young_bins]);
    let (m_old, n_old) = group_mean(old, &means[s.young_bins..]);
    let se = s.sd * (1.0 / n_young + 1.0 / n_old).sqrt();
    let delta = (m_old - m_young) / se;
    let z = normal_quantile(1.0 - 0.5 * s.level).unwrap_or(f64::NAN);
    normal_cdf(delta - z) + normal_cdf(-delta - z)
}

/// Rejection rates of the pooled young-versus-rest z-test and of "any
/// adjusted pairwise z-test rejects" on the same simulated bins.
pub fn power_study(config: &SimConfig, threads: Option<usize>) -> Result<SimResult> {
    config.validate()?;
    let Scenario::Power(s) = &config.scenario else {
        return Err(invalid(format!("expected a power scenario, got {}", config.scenario.name())));
    };
    let means = bin_means(s);
    let counts = run_replications::<2, _>(config, threads, |rng| {
        let mut buf = Vec::new();
        let bins: Vec<Moments> = s
            .bin_sizes
            .iter()
            .zip(&means)
            .map(|(&n, &mu)| {
                buf.clear();
                buf.extend((0..n).map(|_| mu + s.sd * s.family.draw(rng)));
                Moments::of(&buf)
            })
            .collect();
        let (young, old) = bins.split_at(s.young_bins);
        let pooled = z_p_two_sided(&Moments::combine(young), &Moments::combine(old)) <= s.level;
        let mut raw = Vec::with_capacity(bins.len() * (bins.len() - 1) / 2);
        for i in 0..bins.len() {
            for j in i + 1..bins.len() {
                raw.push(z_p_two_sided(&bins[i], &bins[j]));
            }
        }
        let any = adjust_values(&raw, s.adjustment).iter().any(|&p| p <= s.level);
        [pooled, any]
    })?;
    let mut references = vec![Reference { label: "nominal_level".into(), value: s.level }];
    if s.family == Family::Normal {
        references.push(Reference { label: "closed_form_pooled_power".into(), value: closed_form_pooled_power(s) });
    }
    Ok(SimResult {
        estimates: vec![
            SimEstimate::new("pooled_z_power", counts[0], config.replications),
            SimEstimate::new("any_adjusted_pairwise_power", counts[1], config.replications),
        ],
        references,
        config: config.clone(),
    })
}

/// Realized type-I error of the two-sample z-test between two equal cells
/// drawn from the same distribution, at level `alpha / family_size`.
pub fn small_cell_size_study(config: &SimConfig, threads: Option<usize>) -> Result<SimResult> {
    config.validate()?;
    let Scenario::SmallCell(s) = &config.scenario else {
        return Err(invalid(format!("expected a small-cell scenario, got {}", config.scenario.name())));
    };
    let level = s.test_level();
    let counts = run_replications::<1, _>(config, threads, |rng| {
        let mut draw = || {
            let xs: Vec<f64> = (0..s.cell_size).map(|_| s.family.draw(rng)).collect();
            Moments::of(&xs)
        };
        let (a, b) = (draw(), draw());
        [z_p_two_sided(&a, &b) <= level]
    })?;
    Ok(SimResult {
        estimates: vec![SimEstimate::new("size", counts[0], config.replications)],
        references: vec![Reference { label: "nominal_level".into(), value: level }],
        config: config.clone(),
    })
}

/// Beta-binomial draw with mean `p` and intra-cluster correlation `icc`.
fn beta_binomial<R: Rng>(rng: &mut R, n: u64, p: f64, icc: f64) -> u64 {
    if n == 0 {
        return 0;
    }
    let p = if icc > 0.0 && n > 1 && p > 0.0 && p < 1.0 {
        let scale = (1.0 - icc) / icc;
        Beta::new(p * scale, (1.0 - p) * scale).map_or(p, |b| b.sample(rng))
    } else {
        p
    };
    binomial(rng, n, p)
}

fn binomial<R: Rng>(rng: &mut R, n: u64, p: f64) -> u64 {
    match Binomial::new(n, p) {
        Ok(b) => b.sample(rng),
        Err(_) => 0,
    }
}

/// Household counts per size class by sequential binomial splitting.
fn multinomial<R: Rng>(rng: &mut R, n: u64, weights: &[f64]) -> Vec<u64> {
    let mut remaining = n;
    let mut mass: f64 = weights.iter().sum();
    weights
        .iter()
        .map(|&w| {
            let k = if mass <= 0.0 || remaining == 0 {
                0
            } else if w >= mass {
                remaining
            } else {
                binomial(rng, remaining, w / mass)
            };
            remaining -= k;
            mass -= w;
            k
        })
        .collect()
}

/// Coverage of the Clopper-Pearson CFR interval (deaths out of cases) and
/// of the equal-tail Poisson interval for the expected death count when
/// infections and fatalities cluster within households.
pub fn cluster_coverage_study(config: &SimConfig, threads: Option<usize>) -> Result<SimResult> {
    config.validate()?;
    let Scenario::ClusterCoverage(s) = &config.scenario else {
        return Err(invalid(format!("expected a cluster-coverage scenario, got {}", config.scenario.name())));
    };
    let weights: Vec<f64> = s.household_sizes.iter().map(|w| w.weight).collect();
    let expected_deaths = s.expected_deaths();
    let failed = std::sync::atomic::AtomicBool::new(false);
    let counts = run_replications::<2, _>(config, threads, |rng| {
        let per_size = multinomial(rng, s.households, &weights);
        let (mut cases, mut deaths) = (0u64, 0u64);
        for (w, &count) in s.household_sizes.iter().zip(&per_size) {
            let size = u64::from(w.size);
            if size == 1 || s.infection_icc == 0.0 && s.fatality_icc == 0.0 {
                let c = binomial(rng, count * size, s.infection_prob);
                cases += c;
                deaths += binomial(rng, c, s.fatality_prob);
            } else {
                for _ in 0..count {
                    let c = beta_binomial(rng, size, s.infection_prob, s.infection_icc);
                    cases += c;
                    deaths += beta_binomial(rng, c, s.fatality_prob, s.fatality_icc);
                }
            }
        }
        let cfr_covered = if cases == 0 {
            true
        } else {
            match CountSample::new(deaths, cases).and_then(|x| binomial_proportion_ci(x, s.level)) {
                Ok(ci) => ci.low <= s.fatality_prob && s.fatality_prob <= ci.high,
                Err(_) => {
                    failed.store(true, std::sync::atomic::Ordering::Relaxed);
                    false
                }
            }
        };
        let count_covered = match poisson_mean_ci_equal_tail(deaths, s.level) {
            Ok(ci) => ci.low <= expected_deaths && expected_deaths <= ci.high,
            Err(_) => {
                failed.store(true, std::sync::atomic::Ordering::Relaxed);
                false
            }
        };
        [cfr_covered, count_covered]
    })?;
    if failed.into_inner() {
        return Err(Error::NoConvergence("interval computation failed inside a replication"));
    }
    Ok(SimResult {
        estimates: vec![
            SimEstimate::new("binomial_cfr_coverage", counts[0], config.replications),
            SimEstimate::new("poisson_count_coverage", counts[1], config.replications),
        ],
        references: vec![
            Reference { label: "nominal_level".into(), value: s.level },
            Reference { label: "expected_deaths".into(), value: expected_deaths },
        ],
        config: config.clone(),
    })
}
