//! Posterior summaries: medians, equal-tailed 95% intervals and tail
//! probabilities of derived quantities.

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::PosteriorSamples;

/// Fewer draws than this are rejected by the summary functions.
pub const MIN_DRAWS: usize = 100;

pub const LOWER_TAIL: f64 = 0.025;
pub const UPPER_TAIL: f64 = 0.975;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", content = "replicate", rename_all = "snake_case")]
pub enum Quantity {
    /// Population ratio `alpha / beta`.
    RatioAlphaOverBeta,
    /// Population frequency `alpha / (alpha + beta)`.
    FrequencyAlphaOverSum,
    /// `p_i / (1 - p_i)` for replicate `i` (0-based).
    PerReplicateOdds(usize),
    /// `p_i` for replicate `i` (0-based).
    PerReplicateFraction(usize),
    /// `(alpha/beta)_treatment / (alpha/beta)_control`.
    RatioOfRatios,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PosteriorSummary {
    pub quantity: Quantity,
    /// Posterior median.
    pub point: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n_draws: usize,
}

/// Per-draw values of `quantity`.
pub fn transform(samples: &PosteriorSamples, quantity: Quantity) -> Result<Vec<f64>> {
    let shapes = || {
        samples
            .alpha
            .iter()
            .zip(&samples.beta)
            .map(|(&a, &b)| (a as f64, b as f64))
    };
    let replicate = |i: usize| {
        samples.p.get(i).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "replicate index {i} out of range (k = {})",
                samples.n_replicates()
            ))
        })
    };
    Ok(match quantity {
        Quantity::RatioAlphaOverBeta => shapes().map(|(a, b)| a / b).collect(),
        Quantity::FrequencyAlphaOverSum => shapes().map(|(a, b)| a / (a + b)).collect(),
        Quantity::PerReplicateOdds(i) => replicate(i)?.iter().map(|p| p / (1.0 - p)).collect(),
        Quantity::PerReplicateFraction(i) => replicate(i)?.clone(),
        Quantity::RatioOfRatios => {
            return Err(Error::InvalidArgument(
                "ratio of ratios needs two sample sets; use ratio_of_ratios".into(),
            ))
        }
    })
}

/// Quantile of sorted data with linear interpolation between order
/// statistics (`(n - 1) q` positioning).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty(), "quantile of empty data");
    let h = (sorted.len() - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn check_draws(n: usize) -> Result<()> {
    if n < MIN_DRAWS {
        return Err(Error::InsufficientDraws {
            required: MIN_DRAWS,
            got: n,
        });
    }
    Ok(())
}

/// Summary of arbitrary per-draw values.
pub fn summarize_values(quantity: Quantity, values: &[f64]) -> Result<PosteriorSummary> {
    check_draws(values.len())?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(PosteriorSummary {
        quantity,
        point: quantile_sorted(&sorted, 0.5),
        ci_low: quantile_sorted(&sorted, LOWER_TAIL),
        ci_high: quantile_sorted(&sorted, UPPER_TAIL),
        n_draws: sorted.len(),
    })
}

pub fn summarize(samples: &PosteriorSamples, quantity: Quantity) -> Result<PosteriorSummary> {
    check_draws(samples.n_draws())?;
    summarize_values(quantity, &transform(samples, quantity)?)
}

/// Fraction of draws whose value of `quantity` is strictly below `threshold`.
pub fn probability_below(
    samples: &PosteriorSamples,
    quantity: Quantity,
    threshold: f64,
) -> Result<f64> {
    check_draws(samples.n_draws())?;
    let values = transform(samples, quantity)?;
    Ok(values.iter().filter(|&&v| v < threshold).count() as f64 / values.len() as f64)
}

/// Per-pair `(alpha_t / beta_t) / (alpha_c / beta_c)`.
///
/// Equal-length sets are paired index by index. Otherwise every draw of the
/// longer set is paired with a uniformly chosen draw of the shorter one.
pub fn ratio_of_ratios_draws<R: Rng + ?Sized>(
    treatment: &PosteriorSamples,
    control: &PosteriorSamples,
    rng: &mut R,
) -> Result<Vec<f64>> {
    check_draws(treatment.n_draws())?;
    check_draws(control.n_draws())?;
    let t = transform(treatment, Quantity::RatioAlphaOverBeta)?;
    let c = transform(control, Quantity::RatioAlphaOverBeta)?;
    Ok(if t.len() == c.len() {
        t.iter().zip(&c).map(|(t, c)| t / c).collect()
    } else if t.len() > c.len() {
        t.iter()
            .map(|t| t / c[rng.random_range(0..c.len())])
            .collect()
    } else {
        c.iter()
            .map(|c| t[rng.random_range(0..t.len())] / c)
            .collect()
    })
}

pub fn ratio_of_ratios<R: Rng + ?Sized>(
    treatment: &PosteriorSamples,
    control: &PosteriorSamples,
    rng: &mut R,
) -> Result<PosteriorSummary> {
    let draws = ratio_of_ratios_draws(treatment, control, rng)?;
    summarize_values(Quantity::RatioOfRatios, &draws)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SamplerConfig;
    use rand::seq::SliceRandom;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn constant_samples(alpha: u32, beta: u32, n: usize) -> PosteriorSamples {
        PosteriorSamples {
            alpha: vec![alpha; n],
            beta: vec![beta; n],
            p: vec![vec![0.25; n]],
            f: None,
            labels: vec!["r".into()],
            config: SamplerConfig::default(),
            acceptance: None,
        }
    }

    fn varied_samples(seed: u64, n: usize) -> PosteriorSamples {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        PosteriorSamples {
            alpha: (0..n).map(|_| rng.random_range(1..100)).collect(),
            beta: (0..n).map(|_| rng.random_range(1..100)).collect(),
            p: vec![(0..n).map(|_| rng.random_range(0.01..0.99)).collect()],
            f: None,
            labels: vec!["r".into()],
            config: SamplerConfig::default(),
            acceptance: None,
        }
    }

    #[test]
    fn degenerate_chain_summary() {
        let s = constant_samples(2, 1, 200);
        let sum = summarize(&s, Quantity::RatioAlphaOverBeta).unwrap();
        assert_eq!((sum.point, sum.ci_low, sum.ci_high), (2.0, 2.0, 2.0));
        let odds = summarize(&s, Quantity::PerReplicateOdds(0)).unwrap();
        assert!((odds.point - 1.0 / 3.0).abs() < 1e-15);
        let freq = summarize(&s, Quantity::FrequencyAlphaOverSum).unwrap();
        assert!((freq.point - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn interpolated_quantiles() {
        let xs: Vec<f64> = (1..=100).map(|x| x as f64).collect();
        let s = summarize_values(Quantity::PerReplicateFraction(0), &xs).unwrap();
        assert!((s.point - 50.5).abs() < 1e-12);
        assert!((s.ci_low - 3.475).abs() < 1e-12);
        assert!((s.ci_high - 97.525).abs() < 1e-12);
    }

    #[test]
    fn too_few_draws() {
        let s = constant_samples(2, 1, 99);
        assert_eq!(
            summarize(&s, Quantity::RatioAlphaOverBeta),
            Err(Error::InsufficientDraws {
                required: 100,
                got: 99
            })
        );
        assert!(probability_below(&s, Quantity::RatioAlphaOverBeta, 1.0).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(ratio_of_ratios(&s, &constant_samples(1, 1, 500), &mut rng).is_err());
    }

    #[test]
    fn bad_quantities() {
        let s = constant_samples(2, 1, 200);
        assert!(summarize(&s, Quantity::PerReplicateOdds(1)).is_err());
        assert!(summarize(&s, Quantity::RatioOfRatios).is_err());
    }

    #[test]
    fn probability_extremes() {
        let s = varied_samples(1, 500);
        let vals = transform(&s, Quantity::RatioAlphaOverBeta).unwrap();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(
            probability_below(&s, Quantity::RatioAlphaOverBeta, lo).unwrap(),
            0.0
        );
        assert_eq!(
            probability_below(&s, Quantity::RatioAlphaOverBeta, hi + 1.0).unwrap(),
            1.0
        );
    }

    #[test]
    fn constant_ratio_of_ratios() {
        let t = constant_samples(4, 1, 300);
        let c = constant_samples(2, 1, 300);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = ratio_of_ratios(&t, &c, &mut rng).unwrap();
        assert_eq!((s.point, s.ci_low, s.ci_high), (2.0, 2.0, 2.0));
        assert_eq!(s.quantity, Quantity::RatioOfRatios);
    }

    #[test]
    fn self_ratio_is_one() {
        let x = varied_samples(2, 1000);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let draws = ratio_of_ratios_draws(&x, &x, &mut rng).unwrap();
        assert!(draws.iter().all(|&d| d == 1.0));

        // Randomly permuted copy: the median of the self-ratio stays near 1.
        let mut perm: Vec<usize> = (0..x.n_draws()).collect();
        perm.shuffle(&mut rng);
        let mut y = x.clone();
        y.alpha = perm.iter().map(|&i| x.alpha[i]).collect();
        y.beta = perm.iter().map(|&i| x.beta[i]).collect();
        let s = ratio_of_ratios(&x, &y, &mut rng).unwrap();
        assert!((s.point - 1.0).abs() < 0.1, "{}", s.point);
    }

    #[test]
    fn unequal_lengths_are_resampled() {
        let t = constant_samples(3, 1, 150);
        let c = varied_samples(3, 400);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let d = ratio_of_ratios_draws(&t, &c, &mut rng).unwrap();
        assert_eq!(d.len(), 400);
        let d = ratio_of_ratios_draws(&c, &t, &mut rng).unwrap();
        assert_eq!(d.len(), 400);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]
            #[test]
            fn summary_permutation_invariant(seed in any::<u64>(), shuffle_seed in any::<u64>()) {
                let s = varied_samples(seed, 300);
                let mut rng = ChaCha8Rng::seed_from_u64(shuffle_seed);
                let mut perm: Vec<usize> = (0..300).collect();
                perm.shuffle(&mut rng);
                let mut t = s.clone();
                t.alpha = perm.iter().map(|&i| s.alpha[i]).collect();
                t.beta = perm.iter().map(|&i| s.beta[i]).collect();
                t.p[0] = perm.iter().map(|&i| s.p[0][i]).collect();
                for q in [Quantity::RatioAlphaOverBeta, Quantity::FrequencyAlphaOverSum, Quantity::PerReplicateOdds(0)] {
                    prop_assert_eq!(summarize(&s, q).unwrap(), summarize(&t, q).unwrap());
                }
            }

            #[test]
            fn probability_monotone(seed in any::<u64>(), a in -1.0f64..3.0, b in -1.0f64..3.0) {
                let s = varied_samples(seed, 200);
                let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
                let pl = probability_below(&s, Quantity::RatioAlphaOverBeta, lo).unwrap();
                let ph = probability_below(&s, Quantity::RatioAlphaOverBeta, hi).unwrap();
                prop_assert!(pl <= ph);
            }

            #[test]
            fn interval_brackets_point(seed in any::<u64>()) {
                let s = varied_samples(seed, 150);
                let sum = summarize(&s, Quantity::RatioAlphaOverBeta).unwrap();
                prop_assert!(sum.ci_low <= sum.point && sum.point <= sum.ci_high);
            }
        }
    }
}
