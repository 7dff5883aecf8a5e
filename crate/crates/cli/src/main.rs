mod args;
mod parse;

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::Path;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde::Serialize;
use serde_json::json;

use reanalysis_core::casestudies::{run_study, Expected, ReportOptions};
use reanalysis_core::distributions::{self as dist, special, BinomialParams, PoissonParams};
use reanalysis_core::exact::{
    binomial_proportion_ci, exact_binomial_test, kruskal_wallis, poisson_mean_ci, poisson_two_sided_p,
    PoissonCi,
};
use reanalysis_core::extrapolation::{
    overdetermination_report, prevalence_interval, rates, DeathBounds,
};
use reanalysis_core::json::{format_float, to_stable_string};
use reanalysis_core::multiplicity::{adjust, pairwise_family, PValueFamily};
use reanalysis_core::simulation::{simulate, ScenarioFile, SimConfig, SimResult, DEFAULT_REPLICATIONS, DEFAULT_SEED};
use reanalysis_core::summary::{ci_to_se, pool_bins, read_bin_table, se_to_ci, two_sample_z_test};
use reanalysis_core::{BinSummary, CountSample, Error};

use args::{Cli, Command, DistCommand, Format, SummaryCommand, TestCommand};

const SEED_ENV: &str = "REANALYSIS_SEED";

/// Exit status for failed reproduce targets.
const EXIT_MISMATCH: u8 = 2;

#[derive(Debug)]
enum Failure {
    Core(Error),
    Input(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Input(msg) => f.write_str(msg),
        }
    }
}

type CmdResult = Result<ExitCode, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> CmdResult {
    match command {
        Command::Reanalyze(a) => {
            let options = ReportOptions { convention: a.convention, deterministic: a.deterministic };
            let mut report = run_study(a.study, a.fatalities, &options)?;
            if let Some(path) = &a.targets {
                let extra: Vec<Expected> = serde_json::from_str(&read_path(path)?)
                    .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
                report.add_targets(&extra);
            }
            match a.format {
                Format::Json => emit_raw(&report.to_json()?)?,
                Format::Text => emit_raw(&report.to_text())?,
            }
            if report.all_reproduced() {
                Ok(ExitCode::SUCCESS)
            } else {
                for f in report.failures() {
                    eprintln!("mismatch: {}", f.label);
                }
                Ok(ExitCode::from(EXIT_MISMATCH))
            }
        }
        Command::Test(t) => run_test(t),
        Command::Simulate(a) => {
            let text = read_path(&a.scenario)?;
            let file = ScenarioFile::from_json(&text)?;
            let seed = match a.seed.or(file.seed) {
                Some(s) => s,
                None => env_seed()?,
            };
            let config = SimConfig::new(seed, a.reps.or(file.replications).unwrap_or(DEFAULT_REPLICATIONS), file.scenario);
            if a.threads == Some(0) {
                return Err(Failure::Input("--threads must be >= 1".into()));
            }
            let result = simulate(&config, a.threads)?;
            match a.format {
                Format::Json => emit(&result)?,
                Format::Text => emit_raw(&simulation_text(&result))?,
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Ingest(a) => {
            let bins = read_table(&a.path)?;
            let rows = bins
                .iter()
                .map(|b| Ok(json!({ "bin": b, "se": b.se()? })))
                .collect::<Result<Vec<_>, Error>>()?;
            emit(&json!({ "bins": rows }))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Extrapolate(a) => {
            let local = parse::parse_region(&a.local, "local").map_err(Failure::Input)?;
            let national = parse::parse_region(&a.national, "national").map_err(Failure::Input)?;
            let bounds = match a.bounds.as_str() {
                "equal-tail" => DeathBounds::EqualTail,
                "integer" => DeathBounds::IntegerGrid { convention: a.convention },
                other => {
                    let v = parse::parse_list(other).map_err(Failure::Input)?;
                    match v.0.as_slice() {
                        [lo, hi] if lo.fract() == 0.0 && hi.fract() == 0.0 && *lo >= 0.0 => {
                            DeathBounds::Fixed { low: *lo as u64, high: *hi as u64 }
                        }
                        _ => return Err(Failure::Input(format!("--bounds: expected equal-tail, integer or LOW,HIGH, got '{other}'"))),
                    }
                }
            };
            let report = overdetermination_report(&local, &national, a.convention)?;
            let intervals = prevalence_interval(&local, &national, a.level, bounds)?;
            emit(&json!({
                "local_rates": rates(&local)?,
                "national_rates": rates(&national)?,
                "report": report,
                "intervals": intervals,
                "bounds": bounds,
            }))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Dist(d) => run_dist(d),
        Command::Summary(s) => run_summary(s),
    }
}

fn run_test(t: TestCommand) -> CmdResult {
    match t {
        TestCommand::Ztest(a) => {
            let (ga, gb) = match (a.a, a.b, a.table, a.split) {
                (Some(x), Some(y), None, _) => {
                    let bin = |label: &str, b: parse::BinArg| BinSummary::new(label, b.n, b.mean, b.ci_low, b.ci_high, a.level);
                    (pool_bins(&[bin("a", x)?])?, pool_bins(&[bin("b", y)?])?)
                }
                (None, None, Some(path), Some(split)) => {
                    let bins = read_table(&path)?;
                    if split == 0 || split >= bins.len() {
                        return Err(Failure::Input(format!("--split must lie in 1..{}", bins.len())));
                    }
                    (pool_bins(&bins[..split])?, pool_bins(&bins[split..])?)
                }
                _ => return Err(Failure::Input("ztest needs --a and --b, or --table and --split".into())),
            };
            emit(&two_sample_z_test(&ga, &gb)?)?;
        }
        TestCommand::Binomial { k, n, p0, convention } => {
            emit(&exact_binomial_test(CountSample::new(k, n)?, p0.0, convention)?)?;
        }
        TestCommand::BinomialCi { k, n, level } => {
            let ci = binomial_proportion_ci(CountSample::new(k, n)?, level)?;
            emit(&json!({ "k": k, "n": n, "level": level, "method": "clopper-pearson", "interval": ci }))?;
        }
        TestCommand::Poisson { k, lambda, convention } => {
            let p = poisson_two_sided_p(k, lambda.0, convention)?;
            emit(&json!({ "k": k, "lambda": lambda.0, "convention": convention, "p_two_sided": p }))?;
        }
        TestCommand::PoissonCi { k, level, grid, convention } => {
            let ci = poisson_mean_ci(k, level, convention, grid)?;
            let out = match &ci {
                PoissonCi::Integer(i) => json!({
                    "k": k,
                    "ci": ci,
                    "low": i.low(),
                    "high": i.high(),
                    "contiguous": i.is_contiguous(),
                    "note": "integer endpoints depend on the two-sided convention",
                }),
                PoissonCi::Real(_) => json!({ "k": k, "ci": ci, "method": "equal-tail" }),
            };
            emit(&out)?;
        }
        TestCommand::KruskalWallis { groups } => {
            let groups: Vec<Vec<f64>> = groups.into_iter().map(|g| g.0).collect();
            emit(&kruskal_wallis(&groups)?)?;
        }
        TestCommand::Adjust { method, p } => {
            let family = PValueFamily::unlabelled(p.0)?;
            let adjusted = adjust(&family, method)?;
            emit(&json!({ "method": method, "raw": family.values(), "adjusted": adjusted.values() }))?;
        }
        TestCommand::Pairwise { table, method } => {
            let bins = read_table(&table)?;
            let family = pairwise_family(&bins)?;
            let adjusted = adjust(&family, method)?;
            let rows: Vec<_> = family
                .labels()
                .iter()
                .zip(family.values())
                .zip(adjusted.values())
                .map(|((label, raw), adj)| json!({ "pair": label, "raw": raw, "adjusted": adj }))
                .collect();
            let any = adjusted.values().iter().any(|&p| p <= 0.05);
            emit(&json!({ "method": method, "pairs": rows, "any_significant_at_5pct": any }))?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn run_dist(d: DistCommand) -> CmdResult {
    let out = match d {
        DistCommand::Binomial { k, n, p } => {
            let params = BinomialParams::new(n, p.0)?;
            let lp = dist::binomial_log_pmf(k, &params)?;
            json!({
                "k": k, "n": n, "p": p.0,
                "pmf": lp.prob(),
                "log_pmf": lp.ln(),
                "cdf": dist::binomial_cdf(k, &params)?,
                "sf": dist::binomial_sf(k, &params)?,
            })
        }
        DistCommand::Poisson { k, lambda } => {
            let params = PoissonParams::new(lambda.0)?;
            let lp = dist::poisson_log_pmf(k, &params);
            json!({
                "k": k, "lambda": lambda.0,
                "pmf": lp.prob(),
                "log_pmf": lp.ln(),
                "cdf": dist::poisson_cdf(k, &params),
                "sf": dist::poisson_sf(k, &params),
            })
        }
        DistCommand::Normal { x, quantile } => match (x, quantile) {
            (Some(x), _) => json!({ "x": x, "cdf": dist::normal_cdf(x), "sf": dist::normal_sf(x) }),
            (None, Some(q)) => json!({ "q": q, "quantile": dist::normal_quantile(q)? }),
            _ => unreachable!("clap requires one of --x and --quantile"),
        },
        DistCommand::ChiSquare { dof, x, quantile } => match (x, quantile) {
            (Some(x), _) => json!({
                "dof": dof, "x": x,
                "cdf": dist::chi_square_cdf(x, dof)?,
                "sf": dist::chi_square_sf(x, dof)?,
            }),
            (None, Some(q)) => json!({ "dof": dof, "q": q, "quantile": dist::chi_square_quantile(q, dof)? }),
            _ => unreachable!("clap requires one of --x and --quantile"),
        },
        DistCommand::Gamma { a, x, quantile } => match (x, quantile) {
            (Some(x), _) => json!({
                "a": a, "x": x,
                "lower": special::reg_lower_gamma(a, x)?,
                "upper": special::reg_upper_gamma(a, x)?,
                "ln_gamma_a": special::ln_gamma(a)?,
            }),
            (None, Some(q)) => json!({ "a": a, "q": q, "quantile": special::inv_reg_lower_gamma(a, q)? }),
            _ => unreachable!("clap requires one of --x and --quantile"),
        },
        DistCommand::Beta { a, b, x, quantile } => match (x, quantile) {
            (Some(x), _) => json!({ "a": a, "b": b, "x": x, "value": special::reg_inc_beta(a, b, x)? }),
            (None, Some(q)) => json!({ "a": a, "b": b, "q": q, "quantile": special::inv_reg_inc_beta(a, b, q)? }),
            _ => unreachable!("clap requires one of --x and --quantile"),
        },
    };
    emit(&out)?;
    Ok(ExitCode::SUCCESS)
}

fn run_summary(s: SummaryCommand) -> CmdResult {
    let out = match s {
        SummaryCommand::CiToSe { low, high, level } => {
            json!({ "ci_low": low, "ci_high": high, "level": level, "se": ci_to_se(low, high, level)? })
        }
        SummaryCommand::SeToCi { mean, se, level } => {
            json!({ "mean": mean, "se": se, "level": level, "interval": se_to_ci(mean, se, level)? })
        }
        SummaryCommand::Pool { table } => {
            let bins = read_table(&table)?;
            json!({ "bins": bins.len(), "pooled": pool_bins(&bins)? })
        }
    };
    emit(&out)?;
    Ok(ExitCode::SUCCESS)
}

fn env_seed() -> Result<u64, Failure> {
    match std::env::var(SEED_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Failure::Input(format!("{SEED_ENV}='{v}' is not a 64-bit unsigned integer"))),
        Err(_) => Ok(DEFAULT_SEED),
    }
}

fn simulation_text(r: &SimResult) -> String {
    let mut out = format!(
        "scenario: {}\nseed: {}\nreplications: {}\n",
        r.config.scenario.name(),
        r.config.seed,
        r.config.replications
    );
    for e in &r.estimates {
        out.push_str(&format!("  {:<30} {} ± {}\n", e.label, format_float(e.value), format_float(e.mc_se)));
    }
    for x in &r.references {
        out.push_str(&format!("  {:<30} {} (reference)\n", x.label, format_float(x.value)));
    }
    out
}

fn read_path(path: &Path) -> Result<String, Failure> {
    let mut text = String::new();
    if path == Path::new("-") {
        io::stdin().read_to_string(&mut text)
    } else {
        File::open(path).and_then(|mut f| f.read_to_string(&mut text))
    }
    .map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    Ok(text)
}

fn read_table(path: &Path) -> Result<Vec<BinSummary>, Failure> {
    let text = read_path(path)?;
    Ok(read_bin_table(text.as_bytes())?)
}

fn emit<T: Serialize>(value: &T) -> Result<(), Failure> {
    emit_raw(&to_stable_string(value)?)
}

fn emit_raw(text: &str) -> Result<(), Failure> {
    let mut out = io::stdout().lock();
    out.write_all(text.as_bytes())
        .and_then(|()| out.flush())
        .map_err(|e| Failure::Input(format!("writing output: {e}")))
}
