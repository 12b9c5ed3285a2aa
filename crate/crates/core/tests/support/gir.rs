//! Marginal-conditional ("getting it right") checks.
//!
//! Each replicate draws `(alpha, beta)` uniformly on `1..=M`, `p_i` from
//! `Beta(alpha, beta)` and data from the likelihood, then runs one sweep from
//! that state. A correct transition kernel leaves the prior invariant, so the
//! post-sweep `alpha` must be distributed like an independent prior draw.

#![allow(dead_code)]

use ddpcr_core::gibbs::{BinomialSampler, SweepState, P_CLAMP};
use ddpcr_core::model::EffectiveCounts;
use ddpcr_core::poisson::{PoissonSampler, PoissonSweepState};
use ddpcr_core::synthetic::simulate_replicate;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Binomial, Distribution};
use statrs::distribution::{ChiSquared, ContinuousCDF};

pub struct Homogeneity {
    pub statistic: f64,
    pub df: f64,
    pub p_value: f64,
}

/// Chi-square homogeneity test between two histograms over the same bins.
pub fn chi_square_homogeneity(x: &[u64], y: &[u64]) -> Homogeneity {
    let nx: u64 = x.iter().sum();
    let ny: u64 = y.iter().sum();
    let n = (nx + ny) as f64;
    let mut statistic = 0.0;
    let mut bins = 0;
    for (&a, &b) in x.iter().zip(y) {
        let col = (a + b) as f64;
        if col == 0.0 {
            continue;
        }
        bins += 1;
        let ea = col * nx as f64 / n;
        let eb = col * ny as f64 / n;
        statistic += (a as f64 - ea).powi(2) / ea + (b as f64 - eb).powi(2) / eb;
    }
    let df = (bins - 1) as f64;
    let p_value = 1.0 - ChiSquared::new(df).unwrap().cdf(statistic);
    Homogeneity {
        statistic,
        df,
        p_value,
    }
}

fn prior_shapes<R: Rng>(m: u32, rng: &mut R) -> (u32, u32) {
    (rng.random_range(1..=m), rng.random_range(1..=m))
}

fn prior_fraction<R: Rng>(alpha: u32, beta: u32, rng: &mut R) -> f64 {
    Beta::new(alpha as f64, beta as f64)
        .unwrap()
        .sample(rng)
        .clamp(P_CLAMP, 1.0 - P_CLAMP)
}

fn histogram(values: impl Iterator<Item = u32>, m: u32) -> Vec<u64> {
    let mut h = vec![0u64; m as usize];
    for v in values {
        h[v as usize - 1] += 1;
    }
    h
}

/// Binomial sampler with `k` replicates of `droplets` informative droplets.
pub fn binomial(m: u32, k: usize, droplets: u64, reps: usize, seed: u64) -> Homogeneity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut swept = Vec::with_capacity(reps);
    for _ in 0..reps {
        let (alpha, beta) = prior_shapes(m, &mut rng);
        let p: Vec<f64> = (0..k)
            .map(|_| prior_fraction(alpha, beta, &mut rng))
            .collect();
        let counts = p
            .iter()
            .map(|&pi| {
                let a = Binomial::new(droplets, pi).unwrap().sample(&mut rng);
                EffectiveCounts {
                    a,
                    b: droplets - a,
                    total: droplets,
                }
            })
            .collect();
        let mut sampler = BinomialSampler::from_state(counts, m, SweepState::new(alpha, beta, p));
        sampler.sweep(&mut rng);
        swept.push(sampler.state().alpha);
    }
    let prior: Vec<u32> = (0..reps).map(|_| prior_shapes(m, &mut rng).0).collect();
    chi_square_homogeneity(
        &histogram(swept.into_iter(), m),
        &histogram(prior.into_iter(), m),
    )
}

/// Poisson-multinomial sampler with `f_i ~ U(0, f_max)`.
pub fn poisson(m: u32, k: usize, droplets: u64, f_max: f64, reps: usize, seed: u64) -> Homogeneity {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut swept = Vec::with_capacity(reps);
    for _ in 0..reps {
        let (alpha, beta) = prior_shapes(m, &mut rng);
        let p: Vec<f64> = (0..k)
            .map(|_| prior_fraction(alpha, beta, &mut rng))
            .collect();
        let f: Vec<f64> = (0..k).map(|_| rng.random::<f64>() * f_max).collect();
        let data = p
            .iter()
            .zip(&f)
            .enumerate()
            .map(|(i, (&pi, &fi))| simulate_replicate(format!("r{i}"), droplets, pi, fi, &mut rng))
            .collect();
        let state = PoissonSweepState { alpha, beta, p, f };
        let mut sampler = PoissonSampler::from_state(data, m, f_max, state).unwrap();
        sampler.sweep(&mut rng, None);
        swept.push(sampler.state().alpha);
    }
    let prior: Vec<u32> = (0..reps).map(|_| prior_shapes(m, &mut rng).0).collect();
    chi_square_homogeneity(
        &histogram(swept.into_iter(), m),
        &histogram(prior.into_iter(), m),
    )
}
