//! Command-line front-end: CSV in, `samples.csv` / `derived.csv` /
//! `summary.json` out.

pub mod args;
pub mod error;
pub mod input;
pub mod output;

use std::fs;
use std::path::Path;

use ddpcr_core::chain::chain_seed;
use ddpcr_core::mode::suggest_upper_bound;
use ddpcr_core::poisson::implied_loading;
use ddpcr_core::posterior::{
    probability_below, ratio_of_ratios_draws, summarize, summarize_values, transform, Quantity,
};
use ddpcr_core::synthetic::{
    generate, loading_for_positive_fraction, FractionSource, GeneratorSpec,
};
use ddpcr_core::{
    run_chains, run_with_auto_bound, validate_dataset, Dataset, ModelKind, PosteriorSamples,
    SamplerConfig,
};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use args::{Cli, Command};
pub use error::CliError;

use args::{
    AnalyzeArgs, Channel, ChannelArgs, DiffexprArgs, ModeBoundArgs, SamplerArgs, SimulateArgs,
};
use output::{
    AnalysisJson, AnalyzeJson, ChannelEcho, ConfigEcho, DiffexprJson, ProbabilityQuery,
    ReplicateEcho, SummaryRecord,
};

const TOOL: &str = "ddpcr";
const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Outcome of a successful command.
#[derive(Debug, Default)]
pub struct Report {
    /// Warnings, already printed to stderr as they occurred.
    pub warnings: Vec<String>,
    /// Text for stdout, if the command produces any.
    pub stdout: Option<String>,
}

impl Report {
    fn warn(&mut self, msg: String) {
        eprintln!("warning: {msg}");
        self.warnings.push(msg);
    }
}

pub fn run(cli: &Cli) -> Result<Report, CliError> {
    match &cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Diffexpr(d) => diffexpr(d),
        Command::Simulate(s) => simulate(s),
        Command::ModeBound(m) => mode_bound(m),
    }
}

fn sampler_config(args: &SamplerArgs) -> Result<SamplerConfig, CliError> {
    let model: ModelKind = args.model.into();
    if args.f_max.is_some() && model != ModelKind::Poisson {
        return Err(CliError::InvalidRequest(
            "--f-max only applies with --model poisson".into(),
        ));
    }
    if args.chains == 0 {
        return Err(CliError::InvalidRequest(
            "--chains must be at least 1".into(),
        ));
    }
    let config = SamplerConfig {
        model,
        upper_bound: args.upper_bound,
        burn_in: args.burn_in,
        thinning: args.thin,
        n_samples: args.samples,
        seed: args.seed,
        double_positive_policy: args.double_positives.into(),
        f_max: args.f_max.unwrap_or(1.0),
    };
    config.validate()?;
    Ok(config)
}

/// Reads a dataset and orients it so that channel A is the numerator.
fn load_dataset(path: &Path, channels: &ChannelArgs) -> Result<Dataset, CliError> {
    let mut ds = input::parse_csv(path)?.with_channels(&channels.channel_a, &channels.channel_b);
    if channels.numerator == Channel::B {
        for r in &mut ds.replicates {
            std::mem::swap(&mut r.a_positives, &mut r.b_positives);
        }
        std::mem::swap(&mut ds.channel_a, &mut ds.channel_b);
    }
    Ok(ds)
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

struct Analysis {
    samples: PosteriorSamples,
    json: AnalysisJson,
}

/// Validates, samples and summarizes one dataset. Warnings go to `report`
/// and into the returned JSON.
fn analyse_dataset(
    path: &Path,
    dataset: &Dataset,
    config: &SamplerConfig,
    args: &SamplerArgs,
    thresholds: &[f64],
    report: &mut Report,
) -> Result<Analysis, CliError> {
    validate_dataset(dataset, config).map_err(|source| CliError::Data {
        path: path.to_path_buf(),
        source,
    })?;
    let mut warnings = Vec::new();
    if config.model == ModelKind::Poisson {
        for rep in &dataset.replicates {
            let implied = implied_loading(rep);
            if implied > config.f_max {
                warnings.push(format!(
                    "{}: replicate `{}` has negative fraction implying loading {implied:.4} > f_max = {}; consider raising --f-max",
                    path.display(),
                    rep.label,
                    config.f_max
                ));
            }
        }
    }
    for w in &warnings {
        report.warn(w.clone());
    }

    let (samples, bounds_tried) = if args.auto_upper_bound {
        let run = run_with_auto_bound(dataset, config, args.chains)?;
        (run.samples, Some(run.bounds_tried))
    } else {
        (run_chains(dataset, config, args.chains)?, None)
    };

    if let Some(msg) = samples.saturation_warning() {
        let msg = format!("{}: {msg}", path.display());
        if args.strict_bound {
            return Err(CliError::Saturated(msg));
        }
        report.warn(msg.clone());
        warnings.push(msg);
    }

    let (a, b) = (&dataset.channel_a, &dataset.channel_b);
    let mut summaries = vec![
        SummaryRecord {
            name: format!("ratio {a}/{b}"),
            summary: summarize(&samples, Quantity::RatioAlphaOverBeta)?,
        },
        SummaryRecord {
            name: format!("frequency {a}/({a}+{b})"),
            summary: summarize(&samples, Quantity::FrequencyAlphaOverSum)?,
        },
    ];
    for (i, rep) in dataset.replicates.iter().enumerate() {
        summaries.push(SummaryRecord {
            name: format!("fraction {a} in {}", rep.label),
            summary: summarize(&samples, Quantity::PerReplicateFraction(i))?,
        });
        summaries.push(SummaryRecord {
            name: format!("odds {a}/{b} in {}", rep.label),
            summary: summarize(&samples, Quantity::PerReplicateOdds(i))?,
        });
    }
    let probability_queries = thresholds
        .iter()
        .map(|&t| {
            Ok(ProbabilityQuery {
                quantity: format!("ratio {a}/{b}"),
                threshold: t,
                probability: probability_below(&samples, Quantity::RatioAlphaOverBeta, t)?,
            })
        })
        .collect::<Result<Vec<_>, ddpcr_core::Error>>()?;

    let json = AnalysisJson {
        input: path.display().to_string(),
        config: ConfigEcho {
            model: config.model,
            upper_bound: samples.config.upper_bound,
            burn_in: config.burn_in,
            thinning: config.thinning,
            n_samples: config.n_samples,
            seed: config.seed,
            double_positive_policy: config.double_positive_policy,
            f_max: config.f_max,
            chains: args.chains,
            auto_upper_bound: args.auto_upper_bound,
            strict_bound: args.strict_bound,
        },
        channels: ChannelEcho {
            a: dataset.channel_a.clone(),
            b: dataset.channel_b.clone(),
            numerator: a.clone(),
            denominator: b.clone(),
        },
        replicates: dataset.replicates.iter().map(ReplicateEcho::from).collect(),
        n_draws: samples.n_draws(),
        max_shape_draw: samples.max_shape(),
        saturated: samples.is_saturated(),
        bounds_tried,
        acceptance_rates: samples.acceptance.clone(),
        summaries,
        probability_queries,
        warnings,
    };
    Ok(Analysis { samples, json })
}

fn write_draws(
    dir: &Path,
    prefix: &str,
    samples: &PosteriorSamples,
    dataset: &Dataset,
) -> Result<(), CliError> {
    output::write_samples(&dir.join(format!("{prefix}samples.csv")), samples)?;
    let mut header = vec!["ratio".to_string(), "frequency".to_string()];
    let mut columns = vec![
        transform(samples, Quantity::RatioAlphaOverBeta)?,
        transform(samples, Quantity::FrequencyAlphaOverSum)?,
    ];
    for i in 0..dataset.len() {
        header.push(format!("odds_{}", i + 1));
        columns.push(transform(samples, Quantity::PerReplicateOdds(i))?);
    }
    output::write_columns(&dir.join(format!("{prefix}derived.csv")), &header, &columns)
}

fn analyze(args: &AnalyzeArgs) -> Result<Report, CliError> {
    let config = sampler_config(&args.sampler)?;
    let dataset = load_dataset(&args.input, &args.channels)?;
    let mut report = Report::default();
    let analysis = analyse_dataset(
        &args.input,
        &dataset,
        &config,
        &args.sampler,
        &args.prob_below,
        &mut report,
    )?;

    create_dir(&args.out)?;
    write_draws(&args.out, "", &analysis.samples, &dataset)?;
    output::write_json(
        &args.out.join("summary.json"),
        &AnalyzeJson {
            tool: TOOL,
            version: VERSION,
            command: "analyze",
            analysis: analysis.json,
        },
    )?;
    Ok(report)
}

/// Control chains use a seed derived from the master seed so that the two
/// conditions never share a random stream.
pub fn control_seed(seed: u64) -> u64 {
    chain_seed(seed, usize::MAX)
}

fn diffexpr(args: &DiffexprArgs) -> Result<Report, CliError> {
    let config = sampler_config(&args.sampler)?;
    let treatment_ds = load_dataset(&args.treatment, &args.channels)?;
    let control_ds = load_dataset(&args.control, &args.channels)?;
    let mut report = Report::default();

    let treatment = analyse_dataset(
        &args.treatment,
        &treatment_ds,
        &config,
        &args.sampler,
        &[],
        &mut report,
    )?;
    let control_config = SamplerConfig {
        seed: control_seed(config.seed),
        ..config.clone()
    };
    let control = analyse_dataset(
        &args.control,
        &control_ds,
        &control_config,
        &args.sampler,
        &[],
        &mut report,
    )?;

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let draws = ratio_of_ratios_draws(&treatment.samples, &control.samples, &mut rng)?;
    let (a, b) = (&treatment_ds.channel_a, &treatment_ds.channel_b);
    let rr_name = format!("ratio of ratios ({a}/{b} treatment) / ({a}/{b} control)");
    let rr = SummaryRecord {
        name: rr_name.clone(),
        summary: summarize_values(Quantity::RatioOfRatios, &draws)?,
    };
    let queries = args
        .prob_below
        .iter()
        .map(|&t| ProbabilityQuery {
            quantity: rr_name.clone(),
            threshold: t,
            probability: draws.iter().filter(|&&d| d < t).count() as f64 / draws.len() as f64,
        })
        .collect();

    create_dir(&args.out)?;
    write_draws(&args.out, "treatment_", &treatment.samples, &treatment_ds)?;
    write_draws(&args.out, "control_", &control.samples, &control_ds)?;
    output::write_columns(
        &args.out.join("ratio_of_ratios.csv"),
        &["ratio_of_ratios".to_string()],
        &[draws],
    )?;
    let warnings = report.warnings.clone();
    output::write_json(
        &args.out.join("summary.json"),
        &DiffexprJson {
            tool: TOOL,
            version: VERSION,
            command: "diffexpr",
            treatment: treatment.json,
            control: control.json,
            ratio_of_ratios: rr,
            probability_queries: queries,
            warnings,
        },
    )?;
    Ok(report)
}

fn simulate(args: &SimulateArgs) -> Result<Report, CliError> {
    if !(args.ratio.is_finite() && args.ratio > 0.0) {
        return Err(CliError::InvalidRequest("--ratio must be positive".into()));
    }
    if !(0.0..1.0).contains(&args.positive_fraction) {
        return Err(CliError::InvalidRequest(
            "--positive-fraction must lie in [0, 1)".into(),
        ));
    }
    let loading = args
        .loading
        .unwrap_or_else(|| loading_for_positive_fraction(args.positive_fraction));
    let p = args.ratio / (1.0 + args.ratio);
    let fraction = match args.concentration {
        Some(c) => FractionSource::Beta {
            alpha: c * p,
            beta: c * (1.0 - p),
        },
        None => FractionSource::Fixed(p),
    };
    let spec = GeneratorSpec {
        replicates: args.replicates,
        droplets_per_replicate: args.droplets,
        fraction,
        loading,
        seed: args.seed,
    };
    let dataset = generate(&spec)?;
    let mut buf = Vec::new();
    input::write_dataset(&dataset, &mut buf).map_err(|e| CliError::Output(e.to_string()))?;
    let mut report = Report::default();
    match &args.out {
        Some(path) => fs::write(path, &buf).map_err(|source| CliError::Io {
            path: path.clone(),
            source,
        })?,
        None => {
            let text = String::from_utf8(buf).expect("csv output is UTF-8");
            report.stdout = Some(text.trim_end().to_string());
        }
    }
    Ok(report)
}

fn mode_bound(args: &ModeBoundArgs) -> Result<Report, CliError> {
    let dataset = input::parse_csv(&args.input)?;
    let estimate = suggest_upper_bound(&dataset, args.double_positives.into())?;
    let text =
        serde_json::to_string_pretty(&estimate).map_err(|e| CliError::Output(e.to_string()))?;
    Ok(Report {
        warnings: Vec::new(),
        stdout: Some(text),
    })
}
