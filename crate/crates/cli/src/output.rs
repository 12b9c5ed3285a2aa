//! Output files: `samples.csv`, `derived.csv`, `summary.json`.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use ddpcr_core::posterior::PosteriorSummary;
use ddpcr_core::{DoublePositivePolicy, ModelKind, PosteriorSamples, ReplicateCounts};
use serde::Serialize;

use crate::error::CliError;

/// Real values are written with 16 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.15e}")
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, CliError> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One row per retained draw: `alpha,beta,p_1..p_k[,f_1..f_k]`.
pub fn write_samples(path: &Path, samples: &PosteriorSamples) -> Result<(), CliError> {
    let mut w = create(path)?;
    let k = samples.n_replicates();
    let mut header = vec!["alpha".to_string(), "beta".to_string()];
    header.extend((1..=k).map(|i| format!("p_{i}")));
    if samples.f.is_some() {
        header.extend((1..=k).map(|i| format!("f_{i}")));
    }
    let err = io_err(path);
    writeln!(w, "{}", header.join(",")).map_err(&err)?;
    let mut line = String::new();
    for t in 0..samples.n_draws() {
        line.clear();
        line.push_str(&samples.alpha[t].to_string());
        line.push(',');
        line.push_str(&samples.beta[t].to_string());
        for p in &samples.p {
            line.push(',');
            line.push_str(&fmt_real(p[t]));
        }
        if let Some(f) = &samples.f {
            for fi in f {
                line.push(',');
                line.push_str(&fmt_real(fi[t]));
            }
        }
        writeln!(w, "{line}").map_err(&err)?;
    }
    w.flush().map_err(&err)
}

/// Per-draw derived quantities for plotting.
pub fn write_columns(path: &Path, header: &[String], columns: &[Vec<f64>]) -> Result<(), CliError> {
    let mut w = create(path)?;
    let err = io_err(path);
    writeln!(w, "{}", header.join(",")).map_err(&err)?;
    let n = columns.first().map_or(0, Vec::len);
    for t in 0..n {
        let row: Vec<String> = columns.iter().map(|c| fmt_real(c[t])).collect();
        writeln!(w, "{}", row.join(",")).map_err(&err)?;
    }
    w.flush().map_err(&err)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Output(e.to_string()))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigEcho {
    pub model: ModelKind,
    pub upper_bound: u32,
    pub burn_in: usize,
    pub thinning: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub double_positive_policy: DoublePositivePolicy,
    pub f_max: f64,
    pub chains: usize,
    pub auto_upper_bound: bool,
    pub strict_bound: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ChannelEcho {
    pub a: String,
    pub b: String,
    pub numerator: String,
    pub denominator: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct ReplicateEcho {
    pub label: String,
    pub a_positive: u64,
    pub b_positive: u64,
    pub double_positive: u64,
    pub negative: u64,
    pub total: u64,
}

impl From<&ReplicateCounts> for ReplicateEcho {
    fn from(r: &ReplicateCounts) -> Self {
        Self {
            label: r.label.clone(),
            a_positive: r.a_positives,
            b_positive: r.b_positives,
            double_positive: r.double_positives,
            negative: r.negatives,
            total: r.total(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SummaryRecord {
    pub name: String,
    #[serde(flatten)]
    pub summary: PosteriorSummary,
}

#[derive(Debug, Clone, Serialize)]
pub struct ProbabilityQuery {
    pub quantity: String,
    pub threshold: f64,
    pub probability: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalysisJson {
    pub input: String,
    pub config: ConfigEcho,
    pub channels: ChannelEcho,
    pub replicates: Vec<ReplicateEcho>,
    pub n_draws: usize,
    pub max_shape_draw: u32,
    pub saturated: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bounds_tried: Option<Vec<u32>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub acceptance_rates: Option<ddpcr_core::model::AcceptanceRates>,
    pub summaries: Vec<SummaryRecord>,
    pub probability_queries: Vec<ProbabilityQuery>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AnalyzeJson {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    #[serde(flatten)]
    pub analysis: AnalysisJson,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiffexprJson {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub treatment: AnalysisJson,
    pub control: AnalysisJson,
    pub ratio_of_ratios: SummaryRecord,
    pub probability_queries: Vec<ProbabilityQuery>,
    pub warnings: Vec<String>,
}
