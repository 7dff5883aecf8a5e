use serde_json::json;

use crate::distributions::chi_square_sf;
use crate::error::{Error, Result};
use crate::test_result::{Method, TestResult};

/// Kruskal-Wallis H with midranks and the usual ties correction; p-value
/// from the chi-square approximation with `groups - 1` degrees of freedom.
///
/// If every observation is tied the correction denominator vanishes; the
/// result is then `H = 0`, `p = 1`, flagged degenerate.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> Result<TestResult> {
    if groups.len() < 2 {
        return Err(Error::domain("Kruskal-Wallis needs at least two groups"));
    }
    if groups.iter().any(Vec::is_empty) {
        return Err(Error::domain("Kruskal-Wallis groups must be nonempty"));
    }
    let mut pooled: Vec<(f64, usize)> = Vec::new();
    for (g, values) in groups.iter().enumerate() {
        for &v in values {
            if v.is_nan() {
                return Err(Error::domain("Kruskal-Wallis observations must not be NaN"));
            }
            pooled.push((v, g));
        }
    }
    let total = pooled.len();
    if total < 3 {
        return Err(Error::domain("Kruskal-Wallis needs at least three observations"));
    }
    pooled.sort_by(|a, b| a.0.total_cmp(&b.0));

    let mut rank_sums = vec![0.0; groups.len()];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < total {
        let mut j = i + 1;
        while j < total && pooled[j].0 == pooled[i].0 {
            j += 1;
        }
        // Ranks i+1..=j share their average.
        let midrank = 0.5 * ((i + 1) + j) as f64;
        for &(_, g) in &pooled[i..j] {
            rank_sums[g] += midrank;
        }
        let t = (j - i) as f64;
        tie_term += t * t * t - t;
        i = j;
    }

    let n = total as f64;
    let correction = 1.0 - tie_term / (n * n * n - n);
    let sizes: Vec<usize> = groups.iter().map(Vec::len).collect();
    let inputs = json!({ "group_sizes": sizes });
    let dof = (groups.len() - 1) as u32;

    if correction <= 0.0 {
        return Ok(TestResult {
            statistic: 0.0,
            p_two_sided: 1.0,
            p_one_sided_low: None,
            method: Method::KruskalWallis,
            convention: None,
            degenerate: true,
            inputs,
        });
    }

    let sum_sq: f64 = rank_sums
        .iter()
        .zip(&sizes)
        .map(|(r, &size)| r * r / size as f64)
        .sum();
    let h_raw = 12.0 / (n * (n + 1.0)) * sum_sq - 3.0 * (n + 1.0);
    let h = (h_raw / correction).max(0.0);
    Ok(TestResult {
        statistic: h,
        p_two_sided: chi_square_sf(h, dof)?,
        p_one_sided_low: None,
        method: Method::KruskalWallis,
        convention: None,
        degenerate: false,
        inputs,
    })
}
