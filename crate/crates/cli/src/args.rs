use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dr_ate::{CenteringRule, RegressionForm};

#[derive(Debug, Parser)]
#[command(name = "dr-ate", version, about = "Average treatment effect estimation for demand-response experiments")]
pub struct Cli {
    /// Output format [default: csv for `region`, json otherwise].
    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,

    /// Write output to this file instead of stdout.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the ATE of a wide-format dataset with SLR, MLR and/or MCM.
    Estimate(EstimateArgs),
    /// t and F tests on the treatment coefficient of each estimator.
    Significance(SignificanceArgs),
    /// Monte Carlo variances of the estimators on a synthetic model.
    Simulate(SimulateArgs),
    /// Best/medium/worst estimator ordering across assignment probabilities.
    Ranking(RankingArgs),
    /// Sign of the SLR-minus-MLR variance gap over a (p, k) grid.
    Region(RegionArgs),
    /// Closed-form against simulated variances for a scalar-covariate model.
    TheoryCheck(TheoryArgs),
}

#[derive(Debug, Args)]
pub struct WideInput {
    /// Wide-format CSV with one row per sample.
    #[arg(long)]
    pub input: Option<PathBuf>,

    /// Outcome column.
    #[arg(long, default_value = "y")]
    pub y_column: String,

    /// Treatment column (values 0 or 1).
    #[arg(long, default_value = "t")]
    pub t_column: String,

    /// Covariate columns, comma separated [default: every other column].
    #[arg(long, value_delimiter = ',')]
    pub covariates: Option<Vec<String>>,

    /// Standardize covariates to zero mean and unit variance before fitting.
    #[arg(long)]
    pub standardize: bool,
}

#[derive(Debug, Args)]
pub struct MethodArgs {
    /// Estimators, comma separated.
    #[arg(long, value_delimiter = ',', value_parser = parse_form, default_value = "slr,mlr,mcm")]
    pub method: Vec<RegressionForm>,
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    #[command(flatten)]
    pub input: WideInput,
    #[command(flatten)]
    pub methods: MethodArgs,
}

#[derive(Debug, Args)]
pub struct SignificanceArgs {
    #[command(flatten)]
    pub input: WideInput,

    /// Long-format CSV (user_id, timestamp, consumption, covariates...);
    /// requires --events.
    #[arg(long, conflicts_with = "input", requires = "events")]
    pub long_input: Option<PathBuf>,

    /// File with one event timestamp per line.
    #[arg(long, requires = "long_input")]
    pub events: Option<PathBuf>,

    /// Write the (user, event) pairs dropped during matching to this JSON file.
    #[arg(long, requires = "long_input")]
    pub drop_report: Option<PathBuf>,

    #[command(flatten)]
    pub methods: MethodArgs,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// Model family: 14a, 14b, 28, 29a, 29b, 29c or 29d.
    #[arg(long, conflicts_with = "spec_file", required_unless_present = "spec_file")]
    pub family: Option<String>,

    /// TOML model specification (see specs/ for the format).
    #[arg(long)]
    pub spec_file: Option<PathBuf>,

    /// Standard deviation of additive Gaussian outcome noise [default: from the model].
    #[arg(long)]
    pub noise_sd: Option<f64>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// Replications per configuration.
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,

    /// Master seed [default: the spec file's `seed`, else 1].
    #[arg(long, env = "DR_ATE_SEED")]
    pub seed: Option<u64>,

    /// Worker threads (0 = all cores). Results do not depend on this.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// Assignment probability [default: from the model].
    #[arg(long)]
    pub p: Option<f64>,

    /// Sample sizes, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "250,500,1000,2000,4000")]
    pub n: Vec<usize>,

    #[command(flatten)]
    pub run: RunArgs,

    #[command(flatten)]
    pub methods: MethodArgs,

    /// Probability MCM centers the treatment on.
    #[arg(long, value_enum, default_value_t = CenteringArg::Design)]
    pub mcm_centering: CenteringArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CenteringArg {
    /// The design assignment probability.
    Design,
    /// The observed treated fraction.
    Empirical,
}

impl From<CenteringArg> for CenteringRule {
    fn from(c: CenteringArg) -> Self {
        match c {
            CenteringArg::Design => CenteringRule::Design,
            CenteringArg::Empirical => CenteringRule::Empirical,
        }
    }
}

#[derive(Debug, Args)]
pub struct RankingArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// Assignment probabilities, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    pub p: Vec<f64>,

    /// Sample size.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,

    #[command(flatten)]
    pub run: RunArgs,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    /// Interior grid points in (0, 1): p = i / (steps + 1).
    #[arg(long, default_value_t = 99)]
    pub p_steps: usize,

    #[arg(long, default_value_t = -2.0, allow_negative_numbers = true)]
    pub k_min: f64,

    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    pub k_max: f64,

    /// Grid points from k-min to k-max inclusive.
    #[arg(long, default_value_t = 81)]
    pub k_steps: usize,
}

#[derive(Debug, Args)]
pub struct TheoryArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// Assignment probability [default: from the model].
    #[arg(long)]
    pub p: Option<f64>,

    /// Sample size.
    #[arg(long, default_value_t = 2000)]
    pub n: usize,

    #[command(flatten)]
    pub run: RunArgs,
}

fn parse_form(s: &str) -> Result<RegressionForm, String> {
    s.parse()
}
