//! Domain types shared by both samplers.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Droplet classification for one replicate.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplicateCounts {
    pub label: String,
    /// Droplets with no amplification.
    pub negatives: u64,
    /// Droplets positive for channel A only.
    pub a_positives: u64,
    /// Droplets positive for channel B only.
    pub b_positives: u64,
    /// Droplets positive for both channels.
    pub double_positives: u64,
}

impl ReplicateCounts {
    pub fn new(
        label: impl Into<String>,
        a_positives: u64,
        b_positives: u64,
        double_positives: u64,
        negatives: u64,
    ) -> Self {
        Self {
            label: label.into(),
            negatives,
            a_positives,
            b_positives,
            double_positives,
        }
    }

    /// Total number of droplets in the replicate.
    pub fn total(&self) -> u64 {
        self.negatives + self.a_positives + self.b_positives + self.double_positives
    }

    /// Observed fraction of negative droplets.
    pub fn negative_fraction(&self) -> f64 {
        self.negatives as f64 / self.total() as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Dataset {
    pub replicates: Vec<ReplicateCounts>,
    pub channel_a: String,
    pub channel_b: String,
}

impl Dataset {
    pub fn new(replicates: Vec<ReplicateCounts>) -> Self {
        Self {
            replicates,
            channel_a: "A".to_string(),
            channel_b: "B".to_string(),
        }
    }

    pub fn with_channels(mut self, a: impl Into<String>, b: impl Into<String>) -> Self {
        self.channel_a = a.into();
        self.channel_b = b.into();
        self
    }

    pub fn len(&self) -> usize {
        self.replicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.replicates.is_empty()
    }

    pub fn labels(&self) -> Vec<String> {
        self.replicates.iter().map(|r| r.label.clone()).collect()
    }
}

/// How double-positive droplets enter the binomial model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DoublePositivePolicy {
    /// Double positives are dropped.
    #[default]
    Ignore,
    /// Each double positive counts once towards A and once towards B.
    AddToBoth,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Binomial,
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub model: ModelKind,
    /// Largest value on the integer grid for alpha and beta.
    pub upper_bound: u32,
    pub burn_in: usize,
    pub thinning: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub double_positive_policy: DoublePositivePolicy,
    /// Upper end of the uniform prior on the dilution factors (Poisson model).
    pub f_max: f64,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            model: ModelKind::Binomial,
            upper_bound: 5000,
            burn_in: 100,
            thinning: 25,
            n_samples: 10_000,
            seed: 0,
            double_positive_policy: DoublePositivePolicy::Ignore,
            f_max: 1.0,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.upper_bound < 2 {
            return Err(Error::InvalidConfig(format!(
                "upper bound must be at least 2, got {}",
                self.upper_bound
            )));
        }
        if self.thinning < 1 {
            return Err(Error::InvalidConfig("thinning must be at least 1".into()));
        }
        if self.n_samples < 1 {
            return Err(Error::InvalidConfig("n_samples must be at least 1".into()));
        }
        if !(self.f_max.is_finite() && self.f_max > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "f_max must be a positive finite number, got {}",
                self.f_max
            )));
        }
        Ok(())
    }
}

/// Counts entering the binomial likelihood after the double-positive policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EffectiveCounts {
    pub a: u64,
    pub b: u64,
    pub total: u64,
}

pub fn effective_counts(rep: &ReplicateCounts, policy: DoublePositivePolicy) -> EffectiveCounts {
    let (a, b) = match policy {
        DoublePositivePolicy::Ignore => (rep.a_positives, rep.b_positives),
        DoublePositivePolicy::AddToBoth => (
            rep.a_positives + rep.double_positives,
            rep.b_positives + rep.double_positives,
        ),
    };
    EffectiveCounts { a, b, total: a + b }
}

/// Checks the dataset against the model chosen in `config`.
pub fn validate_dataset(dataset: &Dataset, config: &SamplerConfig) -> Result<()> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let mut seen = HashSet::new();
    for rep in &dataset.replicates {
        if !seen.insert(rep.label.as_str()) {
            return Err(Error::DuplicateLabel(rep.label.clone()));
        }
        if rep.total() == 0 {
            return Err(Error::ZeroDroplets {
                replicate: rep.label.clone(),
            });
        }
        if config.model == ModelKind::Binomial
            && effective_counts(rep, config.double_positive_policy).total == 0
        {
            return Err(Error::ZeroPositiveDroplets {
                replicate: rep.label.clone(),
            });
        }
    }
    Ok(())
}

/// Per-replicate Metropolis acceptance rates after burn-in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcceptanceRates {
    pub p: Vec<f64>,
    pub f: Vec<f64>,
}

/// Retained draws from one or more chains.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub alpha: Vec<u32>,
    pub beta: Vec<u32>,
    /// `p[i][t]` is draw `t` of replicate `i`.
    pub p: Vec<Vec<f64>>,
    /// Dilution factors, Poisson model only.
    pub f: Option<Vec<Vec<f64>>>,
    pub labels: Vec<String>,
    pub config: SamplerConfig,
    pub acceptance: Option<AcceptanceRates>,
}

impl PosteriorSamples {
    pub fn n_draws(&self) -> usize {
        self.alpha.len()
    }

    pub fn n_replicates(&self) -> usize {
        self.p.len()
    }

    /// Largest alpha or beta draw.
    pub fn max_shape(&self) -> u32 {
        self.alpha
            .iter()
            .chain(&self.beta)
            .copied()
            .max()
            .unwrap_or(0)
    }

    /// Saturation means some draw reached 99% of the grid cap, so the cap is
    /// likely truncating the conditionals.
    pub fn is_saturated(&self) -> bool {
        is_saturated(self.max_shape(), self.config.upper_bound)
    }

    pub fn saturation_warning(&self) -> Option<String> {
        self.is_saturated().then(|| {
            format!(
                "alpha/beta draws reached {} with upper bound M = {}; increase M and re-run",
                self.max_shape(),
                self.config.upper_bound
            )
        })
    }

    /// Appends another chain's draws.
    pub(crate) fn extend(&mut self, other: PosteriorSamples) {
        self.alpha.extend(other.alpha);
        self.beta.extend(other.beta);
        for (mine, theirs) in self.p.iter_mut().zip(other.p) {
            mine.extend(theirs);
        }
        if let (Some(mine), Some(theirs)) = (self.f.as_mut(), other.f) {
            for (m, t) in mine.iter_mut().zip(theirs) {
                m.extend(t);
            }
        }
    }
}

pub(crate) fn is_saturated(max_draw: u32, upper_bound: u32) -> bool {
    max_draw as f64 >= 0.99 * upper_bound as f64
}
