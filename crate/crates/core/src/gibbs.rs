//! Gibbs sampler for the beta-binomial hierarchy
//!
//! ```text
//! alpha, beta ~ Uniform on {1, ..., M}
//! p_i         ~ Beta(alpha, beta)
//! A_i         ~ Binomial(T_i, p_i)
//! ```
//!
//! Each sweep draws `alpha | beta, p`, then `beta | alpha, p`, then every
//! `p_i | alpha, beta` from its conjugate `Beta(alpha + A_i, beta + B_i)`.
//! The shape conditionals have density proportional to
//! `B(alpha, beta)^-k * P^alpha` (with `P = prod p_i`), which is not a named
//! distribution; it is evaluated on the whole integer grid and sampled exactly
//! as a categorical.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::model::{
    effective_counts, is_saturated, validate_dataset, Dataset, EffectiveCounts, ModelKind,
    PosteriorSamples, SamplerConfig,
};

/// Draws of `p_i` are clamped to `[P_CLAMP, 1 - P_CLAMP]` so that `log p` and
/// `log(1 - p)` stay finite.
pub const P_CLAMP: f64 = 1e-12;

// exp(x) underflows to exactly 0.0 below this.
const EXP_UNDERFLOW: f64 = -745.2;

/// Unnormalized log-density of a shape parameter over `1..=M`.
///
/// `log_weights()[j]` belongs to the value `j + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteConditional {
    log_weights: Vec<f64>,
}

impl DiscreteConditional {
    pub fn from_log_weights(log_weights: Vec<f64>) -> Result<Self> {
        if log_weights.is_empty() {
            return Err(Error::InvalidArgument("empty conditional".into()));
        }
        if log_weights
            .iter()
            .any(|w| w.is_nan() || *w == f64::INFINITY)
        {
            return Err(Error::InvalidArgument(
                "log-weights must be finite or -inf".into(),
            ));
        }
        if log_weights.iter().all(|w| *w == f64::NEG_INFINITY) {
            return Err(Error::InvalidArgument("all weights are zero".into()));
        }
        Ok(Self { log_weights })
    }

    pub fn log_weights(&self) -> &[f64] {
        &self.log_weights
    }

    /// Grid cap `M`.
    pub fn upper_bound(&self) -> u32 {
        self.log_weights.len() as u32
    }

    /// Normalized probabilities, `probabilities()[j] = Pr(value = j + 1)`.
    pub fn probabilities(&self) -> Vec<f64> {
        let lse = log_sum_exp(&self.log_weights);
        self.log_weights.iter().map(|w| (w - lse).exp()).collect()
    }

    /// Most probable grid value (smallest on ties).
    pub fn mode(&self) -> u32 {
        argmax(&self.log_weights) as u32 + 1
    }
}

fn argmax(xs: &[f64]) -> usize {
    let mut best = 0;
    for (j, &x) in xs.iter().enumerate() {
        if x > xs[best] {
            best = j;
        }
    }
    best
}

pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// `ln Gamma(n)` for the integers `1..=n_max`.
#[derive(Debug, Clone)]
pub struct IntLogGamma {
    table: Vec<f64>,
}

impl IntLogGamma {
    pub fn new(n_max: u32) -> Self {
        let mut table = Vec::with_capacity(n_max as usize + 1);
        table.push(f64::INFINITY);
        table.extend((1..=n_max).map(|n| ln_gamma(n as f64)));
        Self { table }
    }

    #[inline]
    pub fn ln_gamma(&self, n: u32) -> f64 {
        self.table[n as usize]
    }

    #[inline]
    pub fn ln_beta(&self, a: u32, b: u32) -> f64 {
        self.table[a as usize] + self.table[b as usize] - self.table[(a + b) as usize]
    }
}

/// Fills `out` with `-k ln B(x, other) + x * log_prod` for `x = 1..=M`.
fn fill_shape_log_weights(
    out: &mut Vec<f64>,
    lgamma: &IntLogGamma,
    upper_bound: u32,
    other: u32,
    k: usize,
    log_prod: f64,
) {
    let k = k as f64;
    out.clear();
    out.extend((1..=upper_bound).map(|x| -k * lgamma.ln_beta(x, other) + x as f64 * log_prod));
}

/// Full conditional of `alpha` given `beta` and `log_p = sum ln p_i` over `k`
/// replicates.
pub fn build_alpha_conditional(
    beta: u32,
    k: usize,
    log_p: f64,
    upper_bound: u32,
) -> Result<DiscreteConditional> {
    build_shape_conditional(beta, k, log_p, upper_bound)
}

/// Full conditional of `beta`; identical in form to the alpha conditional
/// with `log_q = sum ln(1 - p_i)` in place of `log_p`.
pub fn build_beta_conditional(
    alpha: u32,
    k: usize,
    log_q: f64,
    upper_bound: u32,
) -> Result<DiscreteConditional> {
    build_shape_conditional(alpha, k, log_q, upper_bound)
}

fn build_shape_conditional(
    other: u32,
    k: usize,
    log_prod: f64,
    upper_bound: u32,
) -> Result<DiscreteConditional> {
    if upper_bound < 1 || other < 1 || other > upper_bound {
        return Err(Error::InvalidArgument(format!(
            "shape {other} outside grid 1..={upper_bound}"
        )));
    }
    if !log_prod.is_finite() {
        return Err(Error::InvalidArgument("log product must be finite".into()));
    }
    let lgamma = IntLogGamma::new(2 * upper_bound);
    let mut lw = Vec::with_capacity(upper_bound as usize);
    fill_shape_log_weights(&mut lw, &lgamma, upper_bound, other, k, log_prod);
    DiscreteConditional::from_log_weights(lw)
}

/// Exact categorical draw from a discrete conditional; returns a value in
/// `1..=M`.
pub fn sample_discrete<R: Rng + ?Sized>(cond: &DiscreteConditional, rng: &mut R) -> u32 {
    let mut scratch = Vec::with_capacity(cond.log_weights.len());
    sample_log_weights(&cond.log_weights, &mut scratch, rng)
}

fn sample_log_weights<R: Rng + ?Sized>(lw: &[f64], scratch: &mut Vec<f64>, rng: &mut R) -> u32 {
    let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    scratch.clear();
    let mut total = 0.0;
    for &w in lw {
        let d = w - max;
        let e = if d > EXP_UNDERFLOW { d.exp() } else { 0.0 };
        total += e;
        scratch.push(e);
    }
    let target = rng.random::<f64>() * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (j, &e) in scratch.iter().enumerate() {
        if e > 0.0 {
            acc += e;
            last_positive = j;
            if target < acc {
                return j as u32 + 1;
            }
        }
    }
    // Rounding in the running sum can leave `target` just past the end.
    last_positive as u32 + 1
}

/// Conjugate draw of one replicate fraction from `Beta(alpha + a, beta + b)`.
pub fn sample_p<R: Rng + ?Sized>(alpha: u32, beta: u32, a: u64, b: u64, rng: &mut R) -> f64 {
    let dist = Beta::new(alpha as f64 + a as f64, beta as f64 + b as f64)
        .expect("beta parameters are at least 1");
    dist.sample(rng).clamp(P_CLAMP, 1.0 - P_CLAMP)
}

/// Reusable grid machinery for the two discrete shape updates.
#[derive(Debug, Clone)]
pub struct ShapeUpdater {
    upper_bound: u32,
    lgamma: IntLogGamma,
    log_weights: Vec<f64>,
    scratch: Vec<f64>,
}

impl ShapeUpdater {
    pub fn new(upper_bound: u32) -> Self {
        Self {
            upper_bound,
            lgamma: IntLogGamma::new(2 * upper_bound),
            log_weights: Vec::with_capacity(upper_bound as usize),
            scratch: Vec::with_capacity(upper_bound as usize),
        }
    }

    pub fn upper_bound(&self) -> u32 {
        self.upper_bound
    }

    /// Draws one shape given the other shape and the matching log product.
    pub fn draw<R: Rng + ?Sized>(
        &mut self,
        other: u32,
        k: usize,
        log_prod: f64,
        rng: &mut R,
    ) -> u32 {
        fill_shape_log_weights(
            &mut self.log_weights,
            &self.lgamma,
            self.upper_bound,
            other,
            k,
            log_prod,
        );
        sample_log_weights(&self.log_weights, &mut self.scratch, rng)
    }
}

/// Current point of a binomial-model chain.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepState {
    pub alpha: u32,
    pub beta: u32,
    pub p: Vec<f64>,
    /// `sum ln p_i`
    pub log_p: f64,
    /// `sum ln(1 - p_i)`
    pub log_q: f64,
}

impl SweepState {
    pub fn new(alpha: u32, beta: u32, p: Vec<f64>) -> Self {
        let mut s = Self {
            alpha,
            beta,
            p,
            log_p: 0.0,
            log_q: 0.0,
        };
        s.refresh_logs();
        s
    }

    pub fn refresh_logs(&mut self) {
        self.log_p = self.p.iter().map(|p| p.ln()).sum();
        self.log_q = self.p.iter().map(|p| (-p).ln_1p()).sum();
    }
}

#[derive(Debug, Clone)]
pub struct BinomialSampler {
    counts: Vec<EffectiveCounts>,
    shapes: ShapeUpdater,
    state: SweepState,
}

impl BinomialSampler {
    /// Sampler at the default starting point `p_i = (A'_i + 0.5) / (T_i + 1)`,
    /// `alpha = beta = 1`.
    pub fn new(dataset: &Dataset, config: &SamplerConfig) -> Result<Self> {
        config.validate()?;
        validate_dataset(dataset, config)?;
        let counts: Vec<_> = dataset
            .replicates
            .iter()
            .map(|r| effective_counts(r, config.double_positive_policy))
            .collect();
        let p = counts
            .iter()
            .map(|c| (c.a as f64 + 0.5) / (c.total as f64 + 1.0))
            .collect();
        Ok(Self::from_state(
            counts,
            config.upper_bound,
            SweepState::new(1, 1, p),
        ))
    }

    pub fn from_state(counts: Vec<EffectiveCounts>, upper_bound: u32, state: SweepState) -> Self {
        Self {
            counts,
            shapes: ShapeUpdater::new(upper_bound),
            state,
        }
    }

    pub fn state(&self) -> &SweepState {
        &self.state
    }

    pub fn counts(&self) -> &[EffectiveCounts] {
        &self.counts
    }

    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        let k = self.counts.len();
        let s = &mut self.state;
        s.alpha = self.shapes.draw(s.beta, k, s.log_p, rng);
        s.beta = self.shapes.draw(s.alpha, k, s.log_q, rng);
        for (p, c) in s.p.iter_mut().zip(&self.counts) {
            *p = sample_p(s.alpha, s.beta, c.a, c.b, rng);
        }
        s.refresh_logs();
    }
}

/// Runs one binomial-model chain: `burn_in` sweeps, then `thinning * n_samples`
/// sweeps keeping every `thinning`-th state.
pub fn run_binomial_chain(dataset: &Dataset, config: &SamplerConfig) -> Result<PosteriorSamples> {
    if config.model != ModelKind::Binomial {
        return Err(Error::InvalidConfig(
            "binomial chain requested with a non-binomial model".into(),
        ));
    }
    let mut sampler = BinomialSampler::new(dataset, config)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k = dataset.len();
    let n = config.n_samples;

    for _ in 0..config.burn_in {
        sampler.sweep(&mut rng);
    }
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    let mut p = vec![Vec::with_capacity(n); k];
    for _ in 0..n {
        for _ in 0..config.thinning {
            sampler.sweep(&mut rng);
        }
        let s = sampler.state();
        alpha.push(s.alpha);
        beta.push(s.beta);
        for (dst, &v) in p.iter_mut().zip(&s.p) {
            dst.push(v);
        }
    }

    let samples = PosteriorSamples {
        alpha,
        beta,
        p,
        f: None,
        labels: dataset.labels(),
        config: config.clone(),
        acceptance: None,
    };
    if is_saturated(samples.max_shape(), config.upper_bound) {
        log::warn!("{}", samples.saturation_warning().unwrap_or_default());
    }
    Ok(samples)
}
