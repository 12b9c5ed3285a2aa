use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ddpcr_core::{DoublePositivePolicy, ModelKind};

#[derive(Debug, Parser)]
#[command(
    name = "ddpcr",
    version,
    about = "Bayesian ratio estimation for replicated ddPCR counts"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyze one dataset.
    Analyze(AnalyzeArgs),
    /// Ratio of ratios between a treatment and a control dataset.
    Diffexpr(DiffexprArgs),
    /// Generate a synthetic dataset in the input CSV schema.
    Simulate(SimulateArgs),
    /// Print the approximate-mode estimate of the grid upper bound.
    ModeBound(ModeBoundArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Binomial,
    Poisson,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Binomial => ModelKind::Binomial,
            ModelArg::Poisson => ModelKind::Poisson,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DoublePositivesArg {
    Ignore,
    AddToBoth,
}

impl From<DoublePositivesArg> for DoublePositivePolicy {
    fn from(d: DoublePositivesArg) -> Self {
        match d {
            DoublePositivesArg::Ignore => DoublePositivePolicy::Ignore,
            DoublePositivesArg::AddToBoth => DoublePositivePolicy::AddToBoth,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Channel {
    A,
    B,
}

#[derive(Debug, Clone, Args)]
pub struct SamplerArgs {
    #[arg(long, value_enum, default_value = "binomial")]
    pub model: ModelArg,

    /// Grid cap M for alpha and beta.
    #[arg(long, default_value_t = 5000)]
    pub upper_bound: u32,

    #[arg(long, default_value_t = 100)]
    pub burn_in: usize,

    #[arg(long, default_value_t = 25)]
    pub thin: usize,

    /// Retained draws (summed over chains).
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    #[arg(long, value_enum, default_value = "ignore")]
    pub double_positives: DoublePositivesArg,

    /// Upper end of the dilution-factor prior (Poisson model only) [default: 1.0].
    #[arg(long)]
    pub f_max: Option<f64>,

    #[arg(long, default_value_t = 1)]
    pub chains: usize,

    /// Choose M from the mode approximation and double it until no draw saturates.
    #[arg(long)]
    pub auto_upper_bound: bool,

    /// Exit with code 4 instead of warning when draws saturate the grid.
    #[arg(long)]
    pub strict_bound: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ChannelArgs {
    /// Display name of the a_positive channel.
    #[arg(long, default_value = "A")]
    pub channel_a: String,

    /// Display name of the b_positive channel.
    #[arg(long, default_value = "B")]
    pub channel_b: String,

    /// Channel placed in the numerator of reported ratios.
    #[arg(long, value_enum, default_value = "a")]
    pub numerator: Channel,
}

#[derive(Debug, Clone, Args)]
pub struct AnalyzeArgs {
    pub input: PathBuf,

    #[arg(short, long, default_value = "ddpcr-out")]
    pub out: PathBuf,

    #[command(flatten)]
    pub sampler: SamplerArgs,

    #[command(flatten)]
    pub channels: ChannelArgs,

    /// Report Pr(ratio < THRESHOLD); repeatable.
    #[arg(long = "prob-below", value_name = "THRESHOLD")]
    pub prob_below: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct DiffexprArgs {
    pub treatment: PathBuf,
    pub control: PathBuf,

    #[arg(short, long, default_value = "ddpcr-out")]
    pub out: PathBuf,

    #[command(flatten)]
    pub sampler: SamplerArgs,

    #[command(flatten)]
    pub channels: ChannelArgs,

    /// Report Pr(ratio of ratios < THRESHOLD); repeatable.
    #[arg(long = "prob-below", value_name = "THRESHOLD")]
    pub prob_below: Vec<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 50)]
    pub replicates: usize,

    #[arg(long, default_value_t = 15_000)]
    pub droplets: u64,

    /// True A:B ratio (fixed across replicates unless dispersion is given).
    #[arg(long, default_value_t = 6.0)]
    pub ratio: f64,

    /// Target overall fraction of positive droplets; sets the loading.
    #[arg(long, conflicts_with = "loading", default_value_t = 0.32)]
    pub positive_fraction: f64,

    /// Mean amplicons per droplet.
    #[arg(long)]
    pub loading: Option<f64>,

    /// Draw p_i ~ Beta(c * r / (1 + r), c / (1 + r)) with concentration c.
    #[arg(long)]
    pub concentration: Option<f64>,

    #[arg(long, default_value_t = 1)]
    pub seed: u64,

    /// Output CSV path; stdout when omitted.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ModeBoundArgs {
    pub input: PathBuf,

    #[arg(long, value_enum, default_value = "ignore")]
    pub double_positives: DoublePositivesArg,
}
