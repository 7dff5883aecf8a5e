use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use reanalysis_core::casestudies::Study;
use reanalysis_core::exact::Grid;
use reanalysis_core::multiplicity::AdjustMethod;
use reanalysis_core::TwoSidedConvention;

use crate::parse::{parse_bin, parse_list, parse_prob, BinArg, FloatList, Prob};

#[derive(Debug, Parser)]
#[command(name = "reanalysis", version, about = "Re-analysis of published summary statistics")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Recompute a case study and compare it with the published values
    Reanalyze(ReanalyzeArgs),
    /// Run a single hypothesis test, interval or adjustment
    #[command(subcommand)]
    Test(TestCommand),
    /// Run a Monte Carlo scenario from a JSON file
    Simulate(SimulateArgs),
    /// Normalize a bin-table CSV into JSON
    Ingest(IngestArgs),
    /// Extrapolate infections from a local study to a national population
    Extrapolate(ExtrapolateArgs),
    /// Evaluate distribution functions
    #[command(subcommand)]
    Dist(DistCommand),
    /// Convert or pool bin summaries
    #[command(subcommand)]
    Summary(SummaryCommand),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
pub struct ReanalyzeArgs {
    /// charite or gangelt
    pub study: Study,
    /// Local fatality count for the gangelt study
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..=388))]
    pub fatalities: u64,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[arg(long, default_value_t = TwoSidedConvention::default())]
    pub convention: TwoSidedConvention,
    /// Omit the timestamp so output is byte-stable
    #[arg(long)]
    pub deterministic: bool,
    /// JSON array of additional expected entries to check
    #[arg(long)]
    pub targets: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum TestCommand {
    /// Two-sample z-test on two bins or on a split bin table
    Ztest(ZtestArgs),
    /// Exact binomial test of k out of n against p0
    Binomial {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        n: u64,
        /// Decimal or fraction such as 7928/174975
        #[arg(long, value_parser = parse_prob)]
        p0: Prob,
        #[arg(long, default_value_t = TwoSidedConvention::default())]
        convention: TwoSidedConvention,
    },
    /// Clopper-Pearson interval for a binomial proportion
    BinomialCi {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Two-sided test of a Poisson count against a mean
    Poisson {
        #[arg(long)]
        k: u64,
        #[arg(long, value_parser = parse_prob_unbounded)]
        lambda: Prob,
        #[arg(long, default_value_t = TwoSidedConvention::default())]
        convention: TwoSidedConvention,
    },
    /// Confidence interval for a Poisson mean
    PoissonCi {
        #[arg(long)]
        k: u64,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
        /// real (equal-tail) or integer
        #[arg(long, default_value = "real")]
        grid: Grid,
        #[arg(long, default_value_t = TwoSidedConvention::default())]
        convention: TwoSidedConvention,
    },
    /// Kruskal-Wallis rank test; repeat --group for each sample
    KruskalWallis {
        #[arg(long = "group", value_parser = parse_list, required = true)]
        groups: Vec<FloatList>,
    },
    /// Bonferroni or Holm adjustment of a p-value family
    Adjust {
        #[arg(long)]
        method: AdjustMethod,
        /// Comma-separated p-values
        #[arg(long, value_parser = parse_list)]
        p: FloatList,
    },
    /// All pairwise z-tests over a bin table, adjusted
    Pairwise {
        #[arg(long)]
        table: PathBuf,
        #[arg(long, default_value = "holm")]
        method: AdjustMethod,
    },
}

#[derive(Debug, Args)]
pub struct ZtestArgs {
    /// First bin as n,mean,ci_low,ci_high
    #[arg(long, value_parser = parse_bin, requires = "b", conflicts_with = "table")]
    pub a: Option<BinArg>,
    /// Second bin as n,mean,ci_low,ci_high
    #[arg(long, value_parser = parse_bin, requires = "a")]
    pub b: Option<BinArg>,
    /// Bin table CSV; the first --split rows form group a
    #[arg(long, requires = "split")]
    pub table: Option<PathBuf>,
    #[arg(long)]
    pub split: Option<usize>,
    /// Confidence level of the given intervals
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
}

fn parse_prob_unbounded(s: &str) -> Result<Prob, String> {
    crate::parse::parse_number(s)
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario JSON file
    pub scenario: PathBuf,
    /// Overrides the file and REANALYSIS_SEED
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub reps: Option<u64>,
    /// Worker threads; results do not depend on this
    #[arg(long)]
    pub threads: Option<usize>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// CSV with header label,n,mean,ci_low,ci_high[,level]; - for stdin
    pub path: PathBuf,
}

#[derive(Debug, Args)]
pub struct ExtrapolateArgs {
    /// deaths,confirmed,true_infections or a region JSON file
    #[arg(long)]
    pub local: String,
    /// deaths,confirmed or a region JSON file
    #[arg(long)]
    pub national: String,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// equal-tail, integer, or LOW,HIGH for fixed expected-death bounds
    #[arg(long, default_value = "equal-tail")]
    pub bounds: String,
    #[arg(long, default_value_t = TwoSidedConvention::default())]
    pub convention: TwoSidedConvention,
}

#[derive(Debug, Subcommand)]
pub enum DistCommand {
    /// Binomial pmf, cdf and survival at k
    Binomial {
        #[arg(long)]
        k: u64,
        #[arg(long)]
        n: u64,
        #[arg(long, value_parser = parse_prob)]
        p: Prob,
    },
    /// Poisson pmf, cdf and survival at k
    Poisson {
        #[arg(long)]
        k: u64,
        #[arg(long, value_parser = parse_prob_unbounded)]
        lambda: Prob,
    },
    /// Standard normal cdf at x, or quantile at q
    Normal {
        #[arg(long, allow_hyphen_values = true, required_unless_present = "quantile", conflicts_with = "quantile")]
        x: Option<f64>,
        #[arg(long)]
        quantile: Option<f64>,
    },
    /// Chi-square cdf at x, or quantile at q
    ChiSquare {
        #[arg(long)]
        dof: u32,
        #[arg(long, required_unless_present = "quantile", conflicts_with = "quantile")]
        x: Option<f64>,
        #[arg(long)]
        quantile: Option<f64>,
    },
    /// Regularized incomplete gamma P(a, x), or its inverse at q
    Gamma {
        #[arg(long)]
        a: f64,
        #[arg(long, required_unless_present = "quantile", conflicts_with = "quantile")]
        x: Option<f64>,
        #[arg(long)]
        quantile: Option<f64>,
    },
    /// Regularized incomplete beta I_x(a, b), or its inverse at q
    Beta {
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long, required_unless_present = "quantile", conflicts_with = "quantile")]
        x: Option<f64>,
        #[arg(long)]
        quantile: Option<f64>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SummaryCommand {
    /// Standard error from a symmetric confidence interval
    CiToSe {
        #[arg(long, allow_hyphen_values = true)]
        low: f64,
        #[arg(long, allow_hyphen_values = true)]
        high: f64,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Confidence interval from a mean and standard error
    SeToCi {
        #[arg(long, allow_hyphen_values = true)]
        mean: f64,
        #[arg(long)]
        se: f64,
        #[arg(long, default_value_t = 0.95)]
        level: f64,
    },
    /// Pool the rows of a bin table into one group
    Pool {
        #[arg(long)]
        table: PathBuf,
    },
}
