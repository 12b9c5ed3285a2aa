//! Approximate mode of the shape conditional, used to pick the grid cap `M`.
//!
//! With `ln Gamma(z) ~ z ln z - z`, the digamma difference in the stationarity
//! condition of `B(alpha, beta)^-k * P^alpha` reduces to
//! `ln((alpha + beta) / alpha) = -ln g` where `g = P^(1/k)` is the geometric
//! mean of the `p_i`. Hence `alpha / (alpha + beta) = g` and
//! `alpha* = beta * g / (1 - g)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{effective_counts, Dataset, DoublePositivePolicy};

/// Multiplier applied to `alpha*` when suggesting a grid cap.
pub const SAFETY_FACTOR: f64 = 8.0;

/// Smallest cap ever suggested.
pub const MIN_SUGGESTED_BOUND: u32 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeEstimate {
    pub alpha_star: f64,
    pub suggested_upper_bound: u32,
}

/// Approximate mode of the alpha conditional for shape `beta`, `k` replicates
/// and `log_p = sum ln p_i`. The beta conditional is handled by passing alpha
/// and `log_q`.
pub fn approximate_mode(beta: f64, k: usize, log_p: f64) -> Result<ModeEstimate> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "beta must be positive, got {beta}"
        )));
    }
    let g = (log_p / k as f64).exp();
    if g.is_nan() || g >= 1.0 - 1e-12 {
        return Err(Error::DegenerateGeometricMean);
    }
    let alpha_star = beta * g / (1.0 - g);
    let scaled = (SAFETY_FACTOR * alpha_star).ceil();
    let suggested_upper_bound = if scaled >= u32::MAX as f64 {
        u32::MAX
    } else {
        (scaled as u32).max(MIN_SUGGESTED_BOUND)
    };
    Ok(ModeEstimate {
        alpha_star,
        suggested_upper_bound,
    })
}

/// Heuristic grid cap for a dataset.
///
/// Replicate fractions are point-estimated as `(A' + 0.5) / (T + 1)`, a Beta
/// distribution is fitted to them by moments, and [`approximate_mode`] is
/// applied to both shapes with the fitted other shape plugged in. The larger
/// suggestion wins.
pub fn suggest_upper_bound(
    dataset: &Dataset,
    policy: DoublePositivePolicy,
) -> Result<ModeEstimate> {
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let p: Vec<f64> = dataset
        .replicates
        .iter()
        .map(|r| {
            let c = effective_counts(r, policy);
            (c.a as f64 + 0.5) / (c.total as f64 + 1.0)
        })
        .collect();
    let k = p.len();
    let mean = p.iter().sum::<f64>() / k as f64;
    let var = if k > 1 {
        p.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1) as f64
    } else {
        0.0
    };
    // Moment fit; a single replicate or zero spread gives no information on
    // the concentration, so fall back to the prior's smallest shapes.
    let concentration = if var > 0.0 {
        (mean * (1.0 - mean) / var - 1.0).max(2.0)
    } else {
        2.0
    };
    let alpha_fit = (mean * concentration).max(1.0);
    let beta_fit = ((1.0 - mean) * concentration).max(1.0);
    let log_p: f64 = p.iter().map(|x| x.ln()).sum();
    let log_q: f64 = p.iter().map(|x| (-x).ln_1p()).sum();
    let a = approximate_mode(beta_fit, k, log_p)?;
    let b = approximate_mode(alpha_fit, k, log_q)?;
    Ok(if a.suggested_upper_bound >= b.suggested_upper_bound {
        a
    } else {
        b
    })
}
