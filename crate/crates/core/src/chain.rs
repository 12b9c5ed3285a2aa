//! Model dispatch, multi-chain runs and automatic grid-cap selection.

use crate::error::{Error, Result};
use crate::gibbs::run_binomial_chain;
use crate::mode::suggest_upper_bound;
use crate::model::{ModelKind, PosteriorSamples, SamplerConfig};
use crate::poisson::run_poisson_chain;
use crate::Dataset;

/// Largest grid cap the automatic search will try.
pub const MAX_AUTO_BOUND: u32 = 1 << 20;

pub fn run_chain(dataset: &Dataset, config: &SamplerConfig) -> Result<PosteriorSamples> {
    match config.model {
        ModelKind::Binomial => run_binomial_chain(dataset, config),
        ModelKind::Poisson => run_poisson_chain(dataset, config),
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed of chain `index` in a multi-chain run.
pub fn chain_seed(master: u64, index: usize) -> u64 {
    splitmix64(master ^ splitmix64(index as u64))
}

/// Runs `n_chains` independent chains in parallel and concatenates their
/// draws in chain order.
///
/// A single chain uses `config.seed` as is. With several chains, chain `c`
/// uses [`chain_seed`]`(seed, c)` and keeps `n_samples / n_chains` draws (the
/// first `n_samples % n_chains` chains keep one more), so the total is
/// `n_samples`.
pub fn run_chains(
    dataset: &Dataset,
    config: &SamplerConfig,
    n_chains: usize,
) -> Result<PosteriorSamples> {
    if n_chains == 0 {
        return Err(Error::InvalidConfig(
            "at least one chain is required".into(),
        ));
    }
    if n_chains == 1 {
        return run_chain(dataset, config);
    }
    if config.n_samples < n_chains {
        return Err(Error::InvalidConfig(format!(
            "{} samples cannot be split over {n_chains} chains",
            config.n_samples
        )));
    }
    let configs: Vec<SamplerConfig> = (0..n_chains)
        .map(|c| SamplerConfig {
            seed: chain_seed(config.seed, c),
            n_samples: config.n_samples / n_chains + usize::from(c < config.n_samples % n_chains),
            ..config.clone()
        })
        .collect();

    let results: Vec<Result<PosteriorSamples>> = std::thread::scope(|scope| {
        let handles: Vec<_> = configs
            .iter()
            .map(|cfg| scope.spawn(move || run_chain(dataset, cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("sampler thread panicked"))
            .collect()
    });

    let mut iter = results.into_iter();
    let mut merged = iter.next().expect("at least two chains")?;
    let mut acceptance = merged.acceptance.take();
    for r in iter {
        let r = r?;
        if let (Some(acc), Some(other)) = (acceptance.as_mut(), r.acceptance.as_ref()) {
            for (a, b) in acc.p.iter_mut().zip(&other.p) {
                *a += b;
            }
            for (a, b) in acc.f.iter_mut().zip(&other.f) {
                *a += b;
            }
        }
        merged.extend(r);
    }
    if let Some(acc) = acceptance.as_mut() {
        acc.p
            .iter_mut()
            .chain(acc.f.iter_mut())
            .for_each(|a| *a /= n_chains as f64);
    }
    merged.acceptance = acceptance;
    merged.config = config.clone();
    Ok(merged)
}

#[derive(Debug, Clone)]
pub struct AutoBoundRun {
    pub samples: PosteriorSamples,
    /// Every cap tried, in order; the last one produced `samples`.
    pub bounds_tried: Vec<u32>,
}

/// Starts at the cap suggested by the mode approximation and doubles it until
/// no draw saturates (or [`MAX_AUTO_BOUND`] is reached).
pub fn run_with_auto_bound(
    dataset: &Dataset,
    config: &SamplerConfig,
    n_chains: usize,
) -> Result<AutoBoundRun> {
    let suggested = suggest_upper_bound(dataset, config.double_positive_policy)?;
    let mut bound = suggested.suggested_upper_bound.clamp(2, MAX_AUTO_BOUND);
    let mut bounds_tried = Vec::new();
    loop {
        bounds_tried.push(bound);
        let cfg = SamplerConfig {
            upper_bound: bound,
            ..config.clone()
        };
        let samples = run_chains(dataset, &cfg, n_chains)?;
        if !samples.is_saturated() || bound >= MAX_AUTO_BOUND {
            return Ok(AutoBoundRun {
                samples,
                bounds_tried,
            });
        }
        log::info!("upper bound {bound} saturated; doubling");
        bound = bound.saturating_mul(2).min(MAX_AUTO_BOUND);
    }
}
