//! Acceptance criteria, one check per criterion, each printing a single
//! PASS/FAIL line. Lines go straight to the stderr handle so they appear
//! even when the harness captures test output.

use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use reanalysis_core::casestudies::{run_charite, run_gangelt, Outcome, ReportOptions};
use reanalysis_core::distributions::special::reg_inc_beta;
use reanalysis_core::distributions::{
    binomial_cdf, binomial_cdf_by_beta, binomial_cdf_by_summation, binomial_log_pmf, chi_square_cdf,
    chi_square_quantile, normal_cdf, normal_quantile, poisson_cdf, poisson_log_pmf, BinomialParams,
    PoissonParams,
};
use reanalysis_core::exact::{
    exact_binomial_test, poisson_mean_ci_equal_tail, poisson_mean_ci_integer, CENTRAL_DISTANCE_REL_TOL,
    MIN_LIKELIHOOD_LOG_TOL,
};
use reanalysis_core::extrapolation::{
    extrapolate_by_ifr, extrapolate_by_undercount, overdetermination_report, prevalence_interval, rates,
    DeathBounds, Rational, RegionCounts,
};
use reanalysis_core::json::to_stable_string;
use reanalysis_core::multiplicity::{adjust_values, AdjustMethod};
use reanalysis_core::simulation::{
    closed_form_pooled_power, simulate, ClusterScenario, PowerScenario, Scenario, SimConfig, SimResult,
};
use reanalysis_core::summary::{ci_to_se, pool_bins, two_sample_z_test};
use reanalysis_core::{BinSummary, CountSample, TwoSidedConvention};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn report(id: u32, title: &str, outcome: &Check) {
    let line = match outcome {
        Ok(detail) => format!("PASS criterion {id:>2} {title}: {detail}\n"),
        Err(detail) => format!("FAIL criterion {id:>2} {title}: {detail}\n"),
    };
    let _ = std::io::stderr().write_all(line.as_bytes());
}

/// Best of several runs, to keep scheduler noise out of runtime bounds.
fn best_time<T>(mut f: impl FnMut() -> T) -> Duration {
    (0..20)
        .map(|_| {
            let t = Instant::now();
            std::hint::black_box(f());
            t.elapsed()
        })
        .min()
        .unwrap()
}

const MS: Duration = Duration::from_millis(1);

fn charite_p() -> Result<(f64, f64), String> {
    let young = BinSummary::new("young", 127, 4.74, 4.42, 5.05, 0.95).map_err(|e| e.to_string())?;
    let old = BinSummary::new("old", 3585, 5.21, 5.15, 5.27, 0.95).map_err(|e| e.to_string())?;
    let a = pool_bins(&[young]).map_err(|e| e.to_string())?;
    let b = pool_bins(&[old]).map_err(|e| e.to_string())?;
    let t = two_sample_z_test(&a, &b).map_err(|e| e.to_string())?;
    Ok((t.p_two_sided, t.p_one_sided_low.unwrap_or(f64::NAN)))
}

fn criterion_1() -> Check {
    let (two, one) = charite_p()?;
    ensure((0.0035..=0.0045).contains(&two), || format!("two-sided p {two} outside [0.0035, 0.0045]"))?;
    ensure((0.0017..=0.0023).contains(&one), || format!("one-sided p {one} outside [0.0017, 0.0023]"))?;
    let se = ci_to_se(4.42, 5.05, 0.95).map_err(|e| e.to_string())?;
    ensure((se - 0.1607).abs() < 5e-5, || format!("se {se}"))?;
    let elapsed = best_time(charite_p);
    ensure(elapsed < MS, || format!("runtime {elapsed:?}"))?;
    Ok(format!("p two-sided {two:.5}, one-sided {one:.5}, runtime {elapsed:?}"))
}

fn criterion_2() -> Check {
    let (two, _) = charite_p()?;
    let scaled = 45.0 * two;
    ensure((0.16..=0.21).contains(&scaled), || format!("45 p = {scaled}"))?;
    let bonferroni = adjust_values(&vec![two; 45], AdjustMethod::Bonferroni);
    ensure(bonferroni.iter().all(|&p| p == scaled), || "Bonferroni adjustment disagrees with 45 p".into())?;
    ensure(scaled > 0.05, || "adjusted p is significant".into())?;
    let r = run_charite(&ReportOptions::default()).map_err(|e| e.to_string())?;
    let verdict = r.computed_value("bonferroni_45_verdict").and_then(|v| v.as_str()).unwrap_or("");
    ensure(verdict == "not significant", || format!("verdict '{verdict}'"))?;
    Ok(format!("45 p = {scaled:.4}, not significant at 5%"))
}

fn gangelt() -> (RegionCounts, RegionCounts) {
    (RegionCounts::new("Gangelt", 8, 388, Some(1956)), RegionCounts::new("Germany", 7928, 174_975, None))
}

fn criterion_3() -> Check {
    let (local, national) = gangelt();
    let ifr = extrapolate_by_ifr(&local, &national).map_err(|e| e.to_string())?;
    let under = extrapolate_by_undercount(&local, &national).map_err(|e| e.to_string())?;
    ensure(ifr.exact == Rational::from_integer(1_938_396), || format!("IFR route {}", ifr.exact))?;
    ensure(under.floor == 882_090, || format!("undercount route floor {}", under.floor))?;
    let lr = rates(&local).map_err(|e| e.to_string())?;
    let nr = rates(&national).map_err(|e| e.to_string())?;
    let detection = lr.detection.as_ref().ok_or("no detection rate")?;
    let local_ifr = lr.ifr.as_ref().ok_or("no IFR")?;
    let implied = Rational::new(7928, 882_090);
    let renders = [
        (lr.cfr.percent(1), "2.1%"),
        (nr.cfr.percent(1), "4.5%"),
        (detection.percent(0), "20%"),
        (local_ifr.percent(1), "0.4%"),
        (reanalysis_core::extrapolation::render_percent(&implied, 1), "0.9%"),
    ];
    for (got, want) in &renders {
        ensure(got == want, || format!("rendered {got}, expected {want}"))?;
    }
    ensure((detection.value() - 0.1984).abs() < 5e-5, || format!("detection {}", detection.value()))?;
    let elapsed = best_time(|| {
        overdetermination_report(&local, &national, TwoSidedConvention::default()).map(|r| r.by_ifr.floor)
    });
    ensure(elapsed < MS, || format!("runtime {elapsed:?}"))?;
    Ok(format!("1938396 and 882090 exact; 2.1% 4.5% 20% 0.4% 0.9%; report runtime {elapsed:?}"))
}

fn criterion_4() -> Check {
    let ci = poisson_mean_ci_equal_tail(8, 0.95).map_err(|e| e.to_string())?;
    ensure((ci.low - 3.454).abs() <= 0.01 && (ci.high - 15.763).abs() <= 0.01, || {
        format!("[{}, {}]", ci.low, ci.high)
    })?;
    let upper_tail = 1.0 - poisson_cdf(7, &PoissonParams::new(ci.low).map_err(|e| e.to_string())?);
    let lower_tail = poisson_cdf(8, &PoissonParams::new(ci.high).map_err(|e| e.to_string())?);
    ensure((upper_tail - 0.025).abs() < 1e-8 && (lower_tail - 0.025).abs() < 1e-8, || {
        format!("tail equations {upper_tail}, {lower_tail}")
    })?;
    let mut highs = Vec::new();
    for conv in TwoSidedConvention::ALL {
        let grid = poisson_mean_ci_integer(8, 0.95, conv).map_err(|e| e.to_string())?;
        ensure(grid.is_contiguous() && grid.low() == Some(4), || format!("{conv}: {:?}", grid.members))?;
        let high = grid.high().unwrap_or(0);
        ensure(high == 15 || high == 16, || format!("{conv}: upper {high}"))?;
        highs.push(format!("{conv} {high}"));
    }
    Ok(format!(
        "equal-tail [{:.4}, {:.4}]; integer grid 4..({}); published 4 to 16 recorded as a discrepancy for 15",
        ci.low,
        ci.high,
        highs.join(", ")
    ))
}

fn binomial_log_pmfs(n: u64, p: f64) -> Vec<f64> {
    let mut ln_choose = 0.0f64;
    (0..=n)
        .map(|k| {
            if k > 0 {
                ln_choose += ((n - k + 1) as f64).ln() - (k as f64).ln();
            }
            ln_choose + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()
        })
        .collect()
}

fn oracle_p_values(log_pmfs: &[f64], mean: f64, k: usize) -> [f64; 3] {
    let pmf: Vec<f64> = log_pmfs.iter().map(|v| v.exp()).collect();
    let lower: f64 = pmf[..=k].iter().sum();
    let upper: f64 = pmf[k..].iter().sum();
    let double = (2.0 * lower.min(upper)).min(1.0);
    let cutoff = log_pmfs[k] + MIN_LIKELIHOOD_LOG_TOL;
    let min_lik: f64 = log_pmfs.iter().zip(&pmf).filter(|(lp, _)| **lp <= cutoff).map(|(_, p)| p).sum();
    let d = (k as f64 - mean).abs();
    let tol = CENTRAL_DISTANCE_REL_TOL * mean.abs().max(1.0);
    let central: f64 = if d <= tol {
        1.0
    } else {
        pmf.iter().enumerate().filter(|(x, _)| (*x as f64 - mean).abs() >= d - tol).map(|(_, p)| p).sum()
    };
    [double, min_lik.min(1.0), central.min(1.0)]
}

fn criterion_5() -> Check {
    let mut checked = 0u64;
    let mut worst = 0.0f64;
    for p0 in [0.01, 0.045, 0.5] {
        for n in 1..=500u64 {
            let lps = binomial_log_pmfs(n, p0);
            for k in 0..=n {
                let want = oracle_p_values(&lps, n as f64 * p0, k as usize);
                for (conv, w) in TwoSidedConvention::ALL.into_iter().zip(want) {
                    let sample = CountSample::new(k, n).map_err(|e| e.to_string())?;
                    let got = exact_binomial_test(sample, p0, conv).map_err(|e| e.to_string())?.p_two_sided;
                    let err = (got - w).abs();
                    worst = worst.max(err);
                    ensure(err < 1e-12, || format!("n={n} k={k} p0={p0} {conv}: {got} vs {w}"))?;
                    checked += 1;
                }
            }
        }
    }
    // 50-digit full-support summations.
    let pinned = [
        (8u64, [0.015_834_185_310_500_609, 0.014_337_088_335_367_575, 0.019_274_489_382_833_474]),
        (9, [0.034_618_851_066_386_574, 0.036_735_906_944_582_026, 0.036_735_906_944_582_026]),
    ];
    let p0 = 7928.0 / 174_975.0;
    for (k, values) in pinned {
        for (conv, want) in TwoSidedConvention::ALL.into_iter().zip(values) {
            let sample = CountSample::new(k, 388).map_err(|e| e.to_string())?;
            let got = exact_binomial_test(sample, p0, conv).map_err(|e| e.to_string())?.p_two_sided;
            ensure((got - want).abs() < 1e-12, || format!("k={k} {conv}: {got} vs {want}"))?;
        }
    }
    Ok(format!(
        "{checked} enumerated p-values, max error {worst:.1e}; k=8 and k=9 pinned; published 2.6% and 5.2% recorded as discrepancies (computed {:.2}% and {:.2}% under minimum-likelihood)",
        100.0 * pinned[0].1[1],
        100.0 * pinned[1].1[1]
    ))
}

fn criterion_6() -> Check {
    let (local, national) = gangelt();
    let iv = prevalence_interval(&local, &national, 0.95, DeathBounds::GANGELT_PUBLISHED).map_err(|e| e.to_string())?;
    let a = (iv.assumption_range.low, iv.assumption_range.high);
    let b = (iv.sampling_range.low, iv.sampling_range.high);
    ensure(a == (882_090.0, 1_938_396.0), || format!("assumption range {a:?}"))?;
    ensure(b == (969_198.0, 3_876_792.0), || format!("sampling range {b:?}"))?;
    Ok("[882090, 1938396] and [969198, 3876792] exact".into())
}

fn criterion_7() -> Check {
    let mut checks = 0;
    for &(n, p) in &[(10u64, 0.3), (388, 7928.0 / 174_975.0), (1000, 0.5), (2500, 0.02)] {
        let params = BinomialParams::new(n, p).map_err(|e| e.to_string())?;
        let mut total = 0.0;
        let mut prev = 0.0;
        for k in 0..=n {
            total += binomial_log_pmf(k, &params).map_err(|e| e.to_string())?.prob();
            let c = binomial_cdf(k, &params).map_err(|e| e.to_string())?;
            ensure(c >= prev - 1e-15, || format!("binomial cdf decreases at n={n} k={k}"))?;
            prev = c;
        }
        ensure((total - 1.0).abs() < 1e-10, || format!("binomial mass {total} at n={n}"))?;
        checks += 1;
    }
    for lambda in [0.5, 16.0, 250.0] {
        let params = PoissonParams::new(lambda).map_err(|e| e.to_string())?;
        let top = (lambda + 40.0 * lambda.sqrt() + 60.0) as u64;
        let total: f64 = (0..=top).map(|k| poisson_log_pmf(k, &params).prob()).sum();
        ensure((total - 1.0).abs() < 1e-10, || format!("poisson mass {total} at {lambda}"))?;
        checks += 1;
    }
    for i in 1..200 {
        let q = f64::from(i) / 200.0;
        let z = normal_quantile(q).map_err(|e| e.to_string())?;
        ensure((normal_cdf(z) - q).abs() < 1e-8, || format!("normal round trip at {q}"))?;
        for dof in [1u32, 2, 16, 18, 200] {
            let x = chi_square_quantile(q, dof).map_err(|e| e.to_string())?;
            let back = chi_square_cdf(x, dof).map_err(|e| e.to_string())?;
            ensure((back - q).abs() < 1e-8, || format!("chi-square round trip at {q}, dof {dof}"))?;
        }
        checks += 6;
    }
    for &(n, p) in &[(50u64, 0.1), (388, 0.045), (2000, 0.3)] {
        let params = BinomialParams::new(n, p).map_err(|e| e.to_string())?;
        for k in (0..n).step_by((n / 25).max(1) as usize) {
            let s = binomial_cdf_by_summation(k, &params).map_err(|e| e.to_string())?;
            let b = binomial_cdf_by_beta(k, &params).map_err(|e| e.to_string())?;
            let direct = 1.0 - reg_inc_beta((k + 1) as f64, (n - k) as f64, p).map_err(|e| e.to_string())?;
            ensure((s - b).abs() < 1e-10 && (s - direct).abs() < 1e-10, || format!("n={n} k={k}: {s} {b}"))?;
            checks += 1;
        }
    }
    let big = BinomialParams::new(174_975, 7928.0 / 174_975.0).map_err(|e| e.to_string())?;
    for k in [0u64, 1, 7928, 100_000, 174_975] {
        let lp = binomial_log_pmf(k, &big).map_err(|e| e.to_string())?;
        ensure(lp.ln().is_some_and(f64::is_finite), || format!("log-pmf not finite at k={k}"))?;
    }
    Ok(format!("{checks} kernel property checks"))
}

fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for case in 0..1000 {
        let m = rng.random_range(1..=60usize);
        let raw: Vec<f64> = (0..m)
            .map(|_| if rng.random_bool(0.1) { 0.01 * f64::from(rng.random_range(0..5u8)) } else { rng.random::<f64>() })
            .collect();
        let bon = adjust_values(&raw, AdjustMethod::Bonferroni);
        let holm = adjust_values(&raw, AdjustMethod::Holm);
        for i in 0..m {
            ensure(holm[i] >= raw[i] && bon[i] >= raw[i], || format!("case {case}: adjusted below raw"))?;
            ensure(holm[i] <= bon[i], || format!("case {case}: Holm above Bonferroni"))?;
            for j in 0..m {
                if raw[i] < raw[j] {
                    ensure(holm[i] <= holm[j] && bon[i] <= bon[j], || format!("case {case}: order broken"))?;
                }
            }
        }
    }
    Ok("1000 random families: adjusted >= raw, Holm <= Bonferroni, order preserved".into())
}

fn estimate(r: &SimResult, label: &str) -> Result<(f64, f64), String> {
    r.estimate(label).map(|e| (e.value, e.mc_se)).ok_or_else(|| format!("missing estimate {label}"))
}

fn sim(scenario: Scenario, threads: Option<usize>) -> Result<SimResult, String> {
    simulate(&SimConfig::new(42, 10_000, scenario), threads).map_err(|e| e.to_string())
}

fn criterion_9() -> Check {
    let start = Instant::now();
    let power = sim(Scenario::Power(PowerScenario::default()), None)?;
    let (pooled, se_p) = estimate(&power, "pooled_z_power")?;
    let (any, se_a) = estimate(&power, "any_adjusted_pairwise_power")?;
    let combined = se_p.hypot(se_a);
    ensure(pooled - any > 3.0 * combined, || format!("(a) pooled {pooled} vs adjusted {any}"))?;
    let closed = closed_form_pooled_power(&PowerScenario::default());
    ensure((pooled - closed).abs() < 3.0 * se_p, || format!("(b) pooled {pooled} vs closed form {closed}"))?;

    let iid = sim(Scenario::ClusterCoverage(ClusterScenario::unclustered()), None)?;
    let clustered = sim(Scenario::ClusterCoverage(ClusterScenario::default()), None)?;
    let mut coverage = Vec::new();
    for label in ["binomial_cfr_coverage", "poisson_count_coverage"] {
        let (c, se) = estimate(&iid, label)?;
        ensure((c - 0.95).abs() < 3.0 * se, || format!("(c) size-1 {label} {c} ± {se}"))?;
        let (k, se_k) = estimate(&clustered, label)?;
        ensure(0.95 - k > 3.0 * se_k, || format!("(c) clustered {label} {k} ± {se_k}"))?;
        coverage.push(format!("{c:.4}/{k:.4}"));
    }

    let serial = sim(Scenario::Power(PowerScenario::default()), Some(1))?;
    let parallel = sim(Scenario::Power(PowerScenario::default()), Some(4))?;
    let bytes = |r: &SimResult| to_stable_string(r).map_err(|e| e.to_string());
    ensure(bytes(&serial)? == bytes(&power)? && bytes(&parallel)? == bytes(&power)?, || {
        "(d) results differ across runs or worker counts".into()
    })?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(60), || format!("runtime {elapsed:?}"))?;
    Ok(format!(
        "power pooled {pooled:.4} vs adjusted {any:.4} (gap {:.1} se), closed form {closed:.4}; coverage iid/clustered {}; identical at 1 and 4 threads; {elapsed:.1?}",
        (pooled - any) / combined,
        coverage.join(", ")
    ))
}

fn criterion_10() -> Check {
    let exe = env!("CARGO_BIN_EXE_reanalysis");
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let cases = [
        ("charite.json", vec!["reanalyze", "charite"]),
        ("gangelt-8.json", vec!["reanalyze", "gangelt", "--fatalities", "8"]),
        ("gangelt-9.json", vec!["reanalyze", "gangelt", "--fatalities", "9"]),
    ];
    for (file, args) in &cases {
        let out = Command::new(exe)
            .args(args)
            .args(["--format", "json", "--deterministic"])
            .output()
            .map_err(|e| e.to_string())?;
        ensure(out.status.code() == Some(0), || format!("{file}: exit {:?}", out.status.code()))?;
        let want = std::fs::read(golden.join(file)).map_err(|e| e.to_string())?;
        ensure(want == out.stdout, || format!("{file}: output differs from golden"))?;
    }
    let code = |args: &[&str]| Command::new(exe).args(args).output().map(|o| o.status.code()).map_err(|e| e.to_string());
    ensure(code(&["reanalyze", "bogus"])? == Some(1), || "usage error did not exit 1".into())?;
    ensure(code(&["test", "adjust", "--method", "holm"])? == Some(1), || "missing flag did not exit 1".into())?;
    ensure(code(&["--help"])? == Some(0), || "help did not exit 0".into())?;

    // Discrepancy entries never fail the run; a failing reproduce target does.
    let r = run_gangelt(8, &ReportOptions::default()).map_err(|e| e.to_string())?;
    ensure(r.all_reproduced() && r.comparisons.iter().any(|c| c.outcome == Outcome::Discrepancy), || {
        "gangelt report outcomes unexpected".into()
    })?;
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let targets = dir.path().join("targets.json");
    std::fs::write(
        &targets,
        r#"[{"label": "by_ifr_floor", "target": {"kind": "exact", "value": 1.0}, "source": "wrong on purpose", "status": "reproduce"}]"#,
    )
    .map_err(|e| e.to_string())?;
    let t = targets.to_str().ok_or("temp path")?;
    ensure(code(&["reanalyze", "gangelt", "--targets", t])? == Some(2), || "failed target did not exit 2".into())?;
    Ok("three golden reports byte-identical; exit codes 0, 1 and 2 verified".into())
}

#[test]
fn acceptance() {
    let criteria: [(u32, &str, fn() -> Check); 10] = [
        (1, "pooled viral-load test", criterion_1),
        (2, "45-way Bonferroni illustration", criterion_2),
        (3, "extrapolation arithmetic", criterion_3),
        (4, "Poisson interval for 8 deaths", criterion_4),
        (5, "exact binomial engine", criterion_5),
        (6, "identification intervals", criterion_6),
        (7, "distribution kernels", criterion_7),
        (8, "multiplicity properties", criterion_8),
        (9, "simulation at desk scale", criterion_9),
        (10, "CLI golden files and exit codes", criterion_10),
    ];
    let mut failed = Vec::new();
    for (id, title, check) in criteria {
        let outcome = check();
        report(id, title, &outcome);
        if outcome.is_err() {
            failed.push(id);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
