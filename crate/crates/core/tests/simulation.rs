use reanalysis_core::json::to_stable_string;
use reanalysis_core::simulation::{
    closed_form_pooled_power, cluster_coverage_study, power_study, simulate, small_cell_size_study,
    ClusterScenario, Family, PowerScenario, Scenario, SimConfig, SimResult, SmallCellScenario,
    SizeWeight, DEFAULT_REPLICATIONS,
};

const SEED: u64 = 42;

fn run(scenario: Scenario, reps: u64) -> SimResult {
    simulate(&SimConfig::new(SEED, reps, scenario), None).unwrap()
}

fn value(r: &SimResult, label: &str) -> (f64, f64) {
    let e = r.estimate(label).unwrap();
    (e.value, e.mc_se)
}

#[test]
fn mc_se_formula_holds_exactly() {
    let r = run(Scenario::Power(PowerScenario::default()), 500);
    for e in &r.estimates {
        let p = e.successes as f64 / 500.0;
        assert_eq!(e.value, p);
        assert_eq!(e.mc_se, (p * (1.0 - p) / 500.0).sqrt());
        assert!((0.0..=1.0).contains(&e.value));
    }
}

#[test]
fn pooled_test_beats_adjusted_pairwise() {
    let r = run(Scenario::Power(PowerScenario::default()), DEFAULT_REPLICATIONS);
    let (pooled, se_a) = value(&r, "pooled_z_power");
    let (any, se_b) = value(&r, "any_adjusted_pairwise_power");
    assert!(pooled - any > 3.0 * se_a.hypot(se_b), "pooled {pooled}, adjusted {any}");
}

#[test]
fn pooled_power_matches_closed_form() {
    let scenario = PowerScenario::default();
    let oracle = closed_form_pooled_power(&scenario);
    let r = run(Scenario::Power(scenario), DEFAULT_REPLICATIONS);
    let (pooled, se) = value(&r, "pooled_z_power");
    assert!((pooled - oracle).abs() < 3.0 * se, "pooled {pooled}, closed form {oracle}");
}

#[test]
fn null_effect_holds_size() {
    let r = run(Scenario::Power(PowerScenario { effect: 0.0, ..Default::default() }), DEFAULT_REPLICATIONS);
    let null_se = (0.05f64 * 0.95 / DEFAULT_REPLICATIONS as f64).sqrt();
    let (pooled, _) = value(&r, "pooled_z_power");
    let (any, _) = value(&r, "any_adjusted_pairwise_power");
    assert!((pooled - 0.05).abs() < 3.0 * null_se, "{pooled}");
    assert!(any <= 0.05 + 3.0 * null_se, "{any}");
}

#[test]
fn huge_effect_saturates() {
    let r = run(Scenario::Power(PowerScenario { effect: 10.0, ..Default::default() }), 200);
    assert_eq!(value(&r, "pooled_z_power").0, 1.0);
    assert_eq!(value(&r, "any_adjusted_pairwise_power").0, 1.0);
}

#[test]
fn large_normal_cells_hold_bonferroni_size() {
    let scenario = SmallCellScenario { cell_size: 1000, family: Family::Normal, ..Default::default() };
    let level = scenario.test_level();
    let r = run(Scenario::SmallCell(scenario), DEFAULT_REPLICATIONS);
    let null_se = (level * (1.0 - level) / DEFAULT_REPLICATIONS as f64).sqrt();
    let (size, _) = value(&r, "size");
    assert!((size - level).abs() < 3.0 * null_se, "{size} vs {level}");
}

#[test]
fn skewed_small_cells_are_reproducible() {
    let cfg = SimConfig::new(SEED, 2000, Scenario::SmallCell(SmallCellScenario::default()));
    let a = small_cell_size_study(&cfg, Some(1)).unwrap();
    let b = small_cell_size_study(&cfg, Some(3)).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.reference("nominal_level"), Some(0.05 / 45.0));
}

#[test]
fn unclustered_coverage_is_nominal() {
    let r = run(Scenario::ClusterCoverage(ClusterScenario::unclustered()), DEFAULT_REPLICATIONS);
    for label in ["binomial_cfr_coverage", "poisson_count_coverage"] {
        let (cov, se) = value(&r, label);
        assert!((cov - 0.95).abs() < 3.0 * se, "{label}: {cov} ± {se}");
    }
}

#[test]
fn clustered_coverage_falls_below_nominal() {
    let r = run(Scenario::ClusterCoverage(ClusterScenario::default()), DEFAULT_REPLICATIONS);
    for label in ["binomial_cfr_coverage", "poisson_count_coverage"] {
        let (cov, se) = value(&r, label);
        assert!(0.95 - cov > 3.0 * se, "{label}: {cov} ± {se}");
    }
}

#[test]
fn mixed_household_sizes_run() {
    let s = ClusterScenario {
        households: 500,
        household_sizes: vec![
            SizeWeight { size: 1, weight: 0.4 },
            SizeWeight { size: 2, weight: 0.35 },
            SizeWeight { size: 5, weight: 0.25 },
        ],
        ..Default::default()
    };
    let r = cluster_coverage_study(&SimConfig::new(1, 300, Scenario::ClusterCoverage(s)), None).unwrap();
    assert_eq!(r.estimates.len(), 2);
}

#[test]
fn identical_across_runs_and_worker_counts() {
    let cfg = SimConfig::new(SEED, 3000, Scenario::Power(PowerScenario::default()));
    let one = to_stable_string(&power_study(&cfg, Some(1)).unwrap()).unwrap();
    let four = to_stable_string(&power_study(&cfg, Some(4)).unwrap()).unwrap();
    let again = to_stable_string(&power_study(&cfg, Some(4)).unwrap()).unwrap();
    assert_eq!(one, four);
    assert_eq!(four, again);

    let other = power_study(&SimConfig { seed: SEED + 1, ..cfg }, Some(2)).unwrap();
    assert_ne!(to_stable_string(&other).unwrap(), one);
}
