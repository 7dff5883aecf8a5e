//! Family-wise multiplicity adjustment (Bonferroni and Holm) and the
//! all-pairs comparison family over a binned table.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::summary::{pool_bins, two_sample_z_test, BinSummary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AdjustMethod {
    Bonferroni,
    Holm,
}

impl std::str::FromStr for AdjustMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bonferroni" => Ok(Self::Bonferroni),
            "holm" => Ok(Self::Holm),
            other => Err(Error::Parse(format!("unknown adjustment method '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PValueFamily {
    values: Vec<f64>,
    labels: Vec<String>,
}

impl PValueFamily {
    pub fn new(values: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if values.len() != labels.len() {
            return Err(Error::domain(format!(
                "{} p-values but {} labels",
                values.len(),
                labels.len()
            )));
        }
        if let Some(bad) = values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::domain(format!("p-value {bad} outside [0, 1]")));
        }
        Ok(Self { values, labels })
    }

    /// A family labelled by position.
    pub fn unlabelled(values: Vec<f64>) -> Result<Self> {
        let labels = (0..values.len()).map(|i| format!("H{}", i + 1)).collect();
        Self::new(values, labels)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Number of unordered pairs among `bins` items.
pub fn pair_count(bins: usize) -> usize {
    bins * bins.saturating_sub(1) / 2
}

/// One two-sample z-test p-value per unordered pair of bins, in
/// lexicographic pair order.
pub fn pairwise_family(bins: &[BinSummary]) -> Result<PValueFamily> {
    if bins.len() < 2 {
        return Err(Error::domain("pairwise comparisons need at least two bins"));
    }
    let pooled = bins
        .iter()
        .map(|b| pool_bins(std::slice::from_ref(b)))
        .collect::<Result<Vec<_>>>()?;
    let mut values = Vec::with_capacity(pair_count(bins.len()));
    let mut labels = Vec::with_capacity(values.capacity());
    for i in 0..bins.len() {
        for j in i + 1..bins.len() {
            values.push(two_sample_z_test(&pooled[i], &pooled[j])?.p_two_sided);
            labels.push(format!("{} vs {}", bins[i].label, bins[j].label));
        }
    }
    PValueFamily::new(values, labels)
}

pub fn adjust(family: &PValueFamily, method: AdjustMethod) -> Result<PValueFamily> {
    if family.is_empty() {
        return Err(Error::Empty("cannot adjust an empty family"));
    }
    Ok(PValueFamily { values: adjust_values(&family.values, method), labels: family.labels.clone() })
}

/// Adjusted p-values in the input order. Holm ties are broken by index.
pub fn adjust_values(raw: &[f64], method: AdjustMethod) -> Vec<f64> {
    let m = raw.len() as f64;
    match method {
        AdjustMethod::Bonferroni => raw.iter().map(|p| (m * p).min(1.0)).collect(),
        AdjustMethod::Holm => {
            let mut order: Vec<usize> = (0..raw.len()).collect();
            order.sort_by(|&a, &b| raw[a].total_cmp(&raw[b]).then(a.cmp(&b)));
            let mut out = vec![0.0; raw.len()];
            let mut running = 0.0f64;
            for (rank, &idx) in order.iter().enumerate() {
                let scaled = ((m - rank as f64) * raw[idx]).min(1.0);
                running = running.max(scaled);
                out[idx] = running;
            }
            out
        }
    }
}
