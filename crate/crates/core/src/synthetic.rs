//! Forward simulation of droplet counts.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Dataset, ReplicateCounts};

/// Source of the per-replicate fraction of A amplicons.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FractionSource {
    /// The same fraction for every replicate.
    Fixed(f64),
    /// Independent `Beta(alpha, beta)` draws per replicate.
    Beta { alpha: f64, beta: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    pub replicates: usize,
    pub droplets_per_replicate: u64,
    pub fraction: FractionSource,
    /// Mean number of amplicons per droplet.
    pub loading: f64,
    pub seed: u64,
}

impl GeneratorSpec {
    /// Generator settings with a fixed A:B ratio, i.e. `p = ratio / (1 + ratio)`.
    pub fn fixed_ratio(
        replicates: usize,
        droplets: u64,
        ratio: f64,
        loading: f64,
        seed: u64,
    ) -> Self {
        Self {
            replicates,
            droplets_per_replicate: droplets,
            fraction: FractionSource::Fixed(ratio / (1.0 + ratio)),
            loading,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidArgument(
                "at least one replicate is required".into(),
            ));
        }
        if self.droplets_per_replicate == 0 {
            return Err(Error::InvalidArgument(
                "droplet count must be positive".into(),
            ));
        }
        if !(self.loading.is_finite() && self.loading >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "invalid loading {}",
                self.loading
            )));
        }
        match self.fraction {
            FractionSource::Fixed(p) if !(p > 0.0 && p < 1.0) => Err(Error::InvalidArgument(
                format!("fixed fraction must lie in (0, 1), got {p}"),
            )),
            FractionSource::Beta { alpha, beta } if !(alpha > 0.0 && beta > 0.0) => Err(
                Error::InvalidArgument("beta shapes must be positive".into()),
            ),
            _ => Ok(()),
        }
    }
}

/// Loading that makes `positive_fraction` of droplets positive on average.
pub fn loading_for_positive_fraction(positive_fraction: f64) -> f64 {
    -(-positive_fraction).ln_1p()
}

/// Simulates one replicate. Each droplet is A-positive with probability
/// `1 - exp(-f p)` and independently B-positive with probability
/// `1 - exp(-f (1 - p))`.
pub fn simulate_replicate<R: Rng + ?Sized>(
    label: impl Into<String>,
    droplets: u64,
    p: f64,
    loading: f64,
    rng: &mut R,
) -> ReplicateCounts {
    let zero_a = (-loading * p).exp();
    let zero_b = (-loading * (1.0 - p)).exp();
    let mut counts = ReplicateCounts::new(label, 0, 0, 0, 0);
    for _ in 0..droplets {
        let has_a = rng.random::<f64>() >= zero_a;
        let has_b = rng.random::<f64>() >= zero_b;
        match (has_a, has_b) {
            (false, false) => counts.negatives += 1,
            (true, false) => counts.a_positives += 1,
            (false, true) => counts.b_positives += 1,
            (true, true) => counts.double_positives += 1,
        }
    }
    counts
}

/// Generates a dataset; replicate `i` uses its own ChaCha stream `i` under
/// `spec.seed`, so the output does not depend on generation order.
pub fn generate(spec: &GeneratorSpec) -> Result<Dataset> {
    spec.validate()?;
    let replicates = (0..spec.replicates)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(i as u64);
            let p = match spec.fraction {
                FractionSource::Fixed(p) => p,
                FractionSource::Beta { alpha, beta } => Beta::new(alpha, beta)
                    .expect("validated shapes")
                    .sample(&mut rng),
            };
            simulate_replicate(
                format!("Replicate {}", i + 1),
                spec.droplets_per_replicate,
                p,
                spec.loading,
                &mut rng,
            )
        })
        .collect();
    Ok(Dataset::new(replicates))
}
