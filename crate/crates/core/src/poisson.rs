//! Poisson-multinomial droplet model.
//!
//! Each droplet of replicate `i` receives `Poisson(f_i * p_i)` A amplicons and
//! `Poisson(f_i * (1 - p_i))` B amplicons. Only presence is observed, so the
//! droplet classes (negative, A only, B only, double) are multinomial with
//! the probabilities computed by [`cell_probabilities`]. The latent amplicon
//! counts are never sampled.
//!
//! Per-replicate `p_i` and `f_i` are updated by random-walk Metropolis on the
//! logit and log scales; step sizes adapt during burn-in and are frozen
//! afterwards. `alpha` and `beta` use the same discrete conditionals as the
//! binomial sampler since, given `p`, they do not depend on the data.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::gibbs::{ShapeUpdater, P_CLAMP};
use crate::model::{
    is_saturated, validate_dataset, AcceptanceRates, Dataset, ModelKind, PosteriorSamples,
    ReplicateCounts, SamplerConfig,
};

/// Cell probabilities below this are treated as zero.
pub const PROB_FLOOR: f64 = 1e-300;

/// Initial random-walk scale for both `logit p` and `log f`.
pub const INITIAL_STEP: f64 = 0.5;

const TARGET_ACCEPTANCE: f64 = 0.44;
const ADAPT_DECAY: f64 = 0.6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellProbabilities {
    pub neg: f64,
    pub a_only: f64,
    pub b_only: f64,
    pub double: f64,
}

impl CellProbabilities {
    pub fn sum(&self) -> f64 {
        self.neg + self.a_only + self.b_only + self.double
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.neg, self.a_only, self.b_only, self.double]
    }
}

/// Droplet class probabilities for fraction `p` and loading `f`.
pub fn cell_probabilities(p: f64, f: f64) -> CellProbabilities {
    let la = f * p;
    let lb = f * (1.0 - p);
    let none_a = (-la).exp();
    let none_b = (-lb).exp();
    let some_a = -(-la).exp_m1();
    let some_b = -(-lb).exp_m1();
    CellProbabilities {
        neg: (-f).exp(),
        a_only: some_a * none_b,
        b_only: none_a * some_b,
        double: some_a * some_b,
    }
}

/// Multinomial log-likelihood without the multinomial coefficient.
///
/// Returns `-inf` when a nonzero count meets a (floored) zero probability.
pub fn log_multinomial_likelihood(rep: &ReplicateCounts, cells: &CellProbabilities) -> f64 {
    let terms = [
        (rep.negatives, cells.neg),
        (rep.a_positives, cells.a_only),
        (rep.b_positives, cells.b_only),
        (rep.double_positives, cells.double),
    ];
    let mut ll = 0.0;
    for (n, prob) in terms {
        if n == 0 {
            continue;
        }
        if prob < PROB_FLOOR {
            return f64::NEG_INFINITY;
        }
        ll += n as f64 * prob.ln();
    }
    ll
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Log target of `logit p_i`: Beta prior, multinomial likelihood and the
/// logit Jacobian `p (1 - p)`.
fn log_target_p(p: f64, f: f64, alpha: u32, beta: u32, rep: &ReplicateCounts) -> f64 {
    if !(p > 0.0 && p < 1.0) {
        return f64::NEG_INFINITY;
    }
    let ll = log_multinomial_likelihood(rep, &cell_probabilities(p, f));
    if ll == f64::NEG_INFINITY {
        return ll;
    }
    alpha as f64 * p.ln() + beta as f64 * (-p).ln_1p() + ll
}

/// Log target of `log f_i`: flat prior on `(0, f_max)`, likelihood and the
/// log Jacobian `f`.
fn log_target_f(p: f64, f: f64, f_max: f64, rep: &ReplicateCounts) -> f64 {
    if !(f > 0.0 && f <= f_max) {
        return f64::NEG_INFINITY;
    }
    let ll = log_multinomial_likelihood(rep, &cell_probabilities(p, f));
    if ll == f64::NEG_INFINITY {
        return ll;
    }
    f.ln() + ll
}

fn accept(log_ratio: f64, u: f64) -> bool {
    log_ratio >= 0.0 || u.ln() < log_ratio
}

/// Reflects a proposal for `log f` at `log f_max`.
fn reflect_log_f(y: f64, log_f_max: f64) -> f64 {
    if y > log_f_max {
        2.0 * log_f_max - y
    } else {
        y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PoissonSweepState {
    pub alpha: u32,
    pub beta: u32,
    pub p: Vec<f64>,
    pub f: Vec<f64>,
}

impl PoissonSweepState {
    fn log_p(&self) -> f64 {
        self.p.iter().map(|p| p.ln()).sum()
    }

    fn log_q(&self) -> f64 {
        self.p.iter().map(|p| (-p).ln_1p()).sum()
    }
}

/// Starting loading `-ln(max(N/total, 1e-6))`, kept inside `(0, f_max)`.
pub fn initial_loading(rep: &ReplicateCounts, f_max: f64) -> f64 {
    let f = -rep.negative_fraction().max(1e-6).ln();
    f.clamp(1e-8_f64.min(0.5 * f_max), f_max * (1.0 - 1e-9))
}

/// Loading implied by the observed negative fraction, `-ln(N / total)`.
pub fn implied_loading(rep: &ReplicateCounts) -> f64 {
    -rep.negative_fraction().ln()
}

#[derive(Debug, Clone)]
pub struct PoissonSampler {
    reps: Vec<ReplicateCounts>,
    shapes: ShapeUpdater,
    state: PoissonSweepState,
    f_max: f64,
    log_step_p: Vec<f64>,
    log_step_f: Vec<f64>,
    accepted_p: Vec<u64>,
    accepted_f: Vec<u64>,
    proposals: u64,
}

impl PoissonSampler {
    pub fn new(dataset: &Dataset, config: &SamplerConfig) -> Result<Self> {
        config.validate()?;
        validate_dataset(dataset, config)?;
        let reps = dataset.replicates.clone();
        let p = reps
            .iter()
            .map(|r| {
                let pos = r.a_positives + r.double_positives;
                let tot = r.a_positives + r.b_positives + 2 * r.double_positives;
                (pos as f64 + 0.5) / (tot as f64 + 1.0)
            })
            .collect();
        let f = reps
            .iter()
            .map(|r| initial_loading(r, config.f_max))
            .collect();
        let state = PoissonSweepState {
            alpha: 1,
            beta: 1,
            p,
            f,
        };
        Self::from_state(reps, config.upper_bound, config.f_max, state)
    }

    pub fn from_state(
        reps: Vec<ReplicateCounts>,
        upper_bound: u32,
        f_max: f64,
        state: PoissonSweepState,
    ) -> Result<Self> {
        let k = reps.len();
        if state.p.len() != k || state.f.len() != k {
            return Err(Error::InvalidArgument(
                "state dimension does not match replicate count".into(),
            ));
        }
        Ok(Self {
            reps,
            shapes: ShapeUpdater::new(upper_bound),
            state,
            f_max,
            log_step_p: vec![INITIAL_STEP.ln(); k],
            log_step_f: vec![INITIAL_STEP.ln(); k],
            accepted_p: vec![0; k],
            accepted_f: vec![0; k],
            proposals: 0,
        })
    }

    pub fn state(&self) -> &PoissonSweepState {
        &self.state
    }

    pub fn step_sizes(&self) -> (Vec<f64>, Vec<f64>) {
        (
            self.log_step_p.iter().map(|s| s.exp()).collect(),
            self.log_step_f.iter().map(|s| s.exp()).collect(),
        )
    }

    pub fn set_step_sizes(&mut self, step_p: f64, step_f: f64) {
        self.log_step_p.fill(step_p.ln());
        self.log_step_f.fill(step_f.ln());
    }

    /// Metropolis test of an explicit proposal for `p_i` given uniform `u`.
    pub fn try_p(&mut self, i: usize, proposed: f64, u: f64) -> bool {
        let s = &self.state;
        let rep = &self.reps[i];
        let cur = log_target_p(s.p[i], s.f[i], s.alpha, s.beta, rep);
        let new = log_target_p(proposed, s.f[i], s.alpha, s.beta, rep);
        let ok = new != f64::NEG_INFINITY && accept(new - cur, u);
        if ok {
            self.state.p[i] = proposed;
        }
        ok
    }

    /// Metropolis test of an explicit proposal for `f_i` given uniform `u`.
    pub fn try_f(&mut self, i: usize, proposed: f64, u: f64) -> bool {
        let s = &self.state;
        let rep = &self.reps[i];
        let cur = log_target_f(s.p[i], s.f[i], self.f_max, rep);
        let new = log_target_f(s.p[i], proposed, self.f_max, rep);
        let ok = new != f64::NEG_INFINITY && accept(new - cur, u);
        if ok {
            self.state.f[i] = proposed;
        }
        ok
    }

    /// Random-walk update of `logit p_i`.
    pub fn mh_update_p<R: Rng + ?Sized>(&mut self, i: usize, rng: &mut R) -> bool {
        let z: f64 = StandardNormal.sample(rng);
        let x = logit(self.state.p[i]) + self.log_step_p[i].exp() * z;
        let proposed = sigmoid(x).clamp(P_CLAMP, 1.0 - P_CLAMP);
        let u = rng.random::<f64>();
        self.try_p(i, proposed, u)
    }

    /// Random-walk update of `log f_i`, reflected below `log f_max`.
    pub fn mh_update_f<R: Rng + ?Sized>(&mut self, i: usize, rng: &mut R) -> bool {
        let z: f64 = StandardNormal.sample(rng);
        let y = self.state.f[i].ln() + self.log_step_f[i].exp() * z;
        let proposed = reflect_log_f(y, self.f_max.ln()).exp().min(self.f_max);
        let u = rng.random::<f64>();
        self.try_f(i, proposed, u)
    }

    /// One sweep. With `adapt = Some(t)` the step sizes follow a
    /// Robbins-Monro update with gain `(t + 1)^-0.6`; otherwise acceptance is
    /// tallied.
    pub fn sweep<R: Rng + ?Sized>(&mut self, rng: &mut R, adapt: Option<usize>) {
        let k = self.reps.len();
        let log_p = self.state.log_p();
        self.state.alpha = self.shapes.draw(self.state.beta, k, log_p, rng);
        let log_q = self.state.log_q();
        self.state.beta = self.shapes.draw(self.state.alpha, k, log_q, rng);

        let gain = adapt.map(|t| ((t + 1) as f64).powf(-ADAPT_DECAY));
        for i in 0..k {
            let ap = self.mh_update_p(i, rng);
            let af = self.mh_update_f(i, rng);
            match gain {
                Some(g) => {
                    self.log_step_p[i] += g * (ap as u8 as f64 - TARGET_ACCEPTANCE);
                    self.log_step_f[i] += g * (af as u8 as f64 - TARGET_ACCEPTANCE);
                }
                None => {
                    self.accepted_p[i] += ap as u64;
                    self.accepted_f[i] += af as u64;
                }
            }
        }
        if gain.is_none() {
            self.proposals += 1;
        }
    }

    pub fn acceptance_rates(&self) -> AcceptanceRates {
        let n = self.proposals.max(1) as f64;
        AcceptanceRates {
            p: self.accepted_p.iter().map(|&a| a as f64 / n).collect(),
            f: self.accepted_f.iter().map(|&a| a as f64 / n).collect(),
        }
    }
}

/// Runs one Poisson-model chain with the same schedule as the binomial chain.
pub fn run_poisson_chain(dataset: &Dataset, config: &SamplerConfig) -> Result<PosteriorSamples> {
    if config.model != ModelKind::Poisson {
        return Err(Error::InvalidConfig(
            "Poisson chain requested with a non-Poisson model".into(),
        ));
    }
    let mut sampler = PoissonSampler::new(dataset, config)?;
    for rep in &dataset.replicates {
        let implied = implied_loading(rep);
        if implied > config.f_max {
            log::warn!(
                "replicate `{}`: negative fraction implies loading {:.3} > f_max = {}",
                rep.label,
                implied,
                config.f_max
            );
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let k = dataset.len();
    let n = config.n_samples;

    for t in 0..config.burn_in {
        sampler.sweep(&mut rng, Some(t));
    }
    let mut alpha = Vec::with_capacity(n);
    let mut beta = Vec::with_capacity(n);
    let mut p = vec![Vec::with_capacity(n); k];
    let mut f = vec![Vec::with_capacity(n); k];
    for _ in 0..n {
        for _ in 0..config.thinning {
            sampler.sweep(&mut rng, None);
        }
        let s = sampler.state();
        alpha.push(s.alpha);
        beta.push(s.beta);
        for i in 0..k {
            p[i].push(s.p[i]);
            f[i].push(s.f[i]);
        }
    }

    let samples = PosteriorSamples {
        alpha,
        beta,
        p,
        f: Some(f),
        labels: dataset.labels(),
        config: config.clone(),
        acceptance: Some(sampler.acceptance_rates()),
    };
    if is_saturated(samples.max_shape(), config.upper_bound) {
        log::warn!("{}", samples.saturation_warning().unwrap_or_default());
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn median(xs: &[f64]) -> f64 {
        let mut v = xs.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        0.5 * (v[(n - 1) / 2] + v[n / 2])
    }

    #[test]
    fn no_loading_means_all_negative() {
        let c = cell_probabilities(0.5, 1e-15);
        assert!((c.neg - 1.0).abs() < 1e-14);
        assert!(c.a_only < 1e-14 && c.b_only < 1e-14 && c.double < 1e-28);
    }

    #[test]
    fn balanced_quarter_cells() {
        let c = cell_probabilities(0.5, 2.0 * LN_2);
        for v in c.as_array() {
            assert!((v - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn hand_computed_cells() {
        let c = cell_probabilities(0.9, 1.0);
        let e = |x: f64| (-x).exp();
        assert!((c.neg - e(1.0)).abs() < 1e-15);
        assert!((c.a_only - (1.0 - e(0.9)) * e(0.1)).abs() < 1e-15);
        assert!((c.b_only - e(0.9) * (1.0 - e(0.1))).abs() < 1e-15);
        assert!((c.double - (1.0 - e(0.9)) * (1.0 - e(0.1))).abs() < 1e-15);
        assert!((c.neg - 0.3679).abs() < 1e-4);
        assert!((c.a_only - 0.5370).abs() < 1e-4);
        assert!((c.b_only - 0.0387).abs() < 1e-4);
        assert!((c.double - 0.0565).abs() < 1e-4);
        assert!((c.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn likelihood_examples() {
        let certain = CellProbabilities {
            neg: 1.0,
            a_only: 0.0,
            b_only: 0.0,
            double: 0.0,
        };
        let r = ReplicateCounts::new("r", 0, 0, 0, 1);
        assert_eq!(log_multinomial_likelihood(&r, &certain), 0.0);

        let quarter = CellProbabilities {
            neg: 0.25,
            a_only: 0.25,
            b_only: 0.25,
            double: 0.25,
        };
        let r = ReplicateCounts::new("r", 1, 1, 1, 1);
        assert!((log_multinomial_likelihood(&r, &quarter) - 4.0 * 0.25f64.ln()).abs() < 1e-12);
        assert!((log_multinomial_likelihood(&r, &quarter) + 5.5452).abs() < 1e-4);

        let no_a = CellProbabilities {
            neg: 0.5,
            a_only: 0.0,
            b_only: 0.5,
            double: 0.0,
        };
        let r = ReplicateCounts::new("r", 1, 0, 0, 0);
        assert_eq!(log_multinomial_likelihood(&r, &no_a), f64::NEG_INFINITY);
        let tiny = CellProbabilities {
            a_only: 1e-301,
            ..no_a
        };
        assert_eq!(log_multinomial_likelihood(&r, &tiny), f64::NEG_INFINITY);
    }

    fn one_rep_sampler(rep: ReplicateCounts, f_max: f64, p: f64, f: f64) -> PoissonSampler {
        let state = PoissonSweepState {
            alpha: 1,
            beta: 1,
            p: vec![p],
            f: vec![f],
        };
        PoissonSampler::from_state(vec![rep], 50, f_max, state).unwrap()
    }

    #[test]
    fn identical_proposal_always_accepted() {
        let mut s = one_rep_sampler(ReplicateCounts::new("r", 40, 10, 5, 200), 1.0, 0.7, 0.3);
        for u in [0.0, 0.3, 0.999_999] {
            assert!(s.try_p(0, 0.7, u));
            assert!(s.try_f(0, 0.3, u));
        }
        s.set_step_sizes(1e-300, 1e-300);
        let mut r = rng(1);
        for _ in 0..100 {
            assert!(s.mh_update_p(0, &mut r));
        }
    }

    #[test]
    fn impossible_proposal_always_rejected() {
        let mut s = one_rep_sampler(ReplicateCounts::new("r", 40, 10, 5, 200), 1.0, 0.7, 0.3);
        for u in [0.0, 0.5, 0.999] {
            assert!(!s.try_p(0, 0.0, u));
            assert!(!s.try_p(0, 1.0, u));
            assert!(!s.try_f(0, 0.0, u));
        }
        assert_eq!(s.state().p[0], 0.7);
        assert_eq!(s.state().f[0], 0.3);
    }

    #[test]
    fn f_proposals_reflect_into_range() {
        assert_eq!(reflect_log_f(0.5, 0.0), -0.5);
        assert_eq!(reflect_log_f(-0.5, 0.0), -0.5);
        // A data set pushing f to the bound: every proposal stays in range.
        let mut s = one_rep_sampler(ReplicateCounts::new("r", 50, 50, 50, 1), 1.0, 0.5, 0.99);
        s.set_step_sizes(0.5, 2.0);
        let mut r = rng(2);
        let mut accepted = 0;
        for _ in 0..5000 {
            accepted += s.mh_update_f(0, &mut r) as u32;
            let f = s.state().f[0];
            assert!(f > 0.0 && f <= 1.0);
        }
        assert!(accepted > 0);
    }

    #[test]
    fn p_chain_matches_grid_posterior() {
        let rep = ReplicateCounts::new("r", 8, 4, 2, 30);
        let f = 0.8;
        let mut s = one_rep_sampler(rep.clone(), 1.0, 0.5, f);
        s.set_step_sizes(1.0, 0.5);
        let mut r = rng(3);
        let n = 100_000;
        let bins = 50;
        let mut hist = vec![0.0; bins];
        for _ in 0..2000 {
            s.mh_update_p(0, &mut r);
        }
        for _ in 0..n {
            s.mh_update_p(0, &mut r);
            let p = s.state().p[0];
            hist[((p * bins as f64) as usize).min(bins - 1)] += 1.0 / n as f64;
        }
        // Oracle: trapezoid integration of prior x likelihood on 1000 points.
        let grid = 1000;
        let dens: Vec<f64> = (0..=grid)
            .map(|j| {
                let p = j as f64 / grid as f64;
                if p == 0.0 || p == 1.0 {
                    0.0
                } else {
                    log_multinomial_likelihood(&rep, &cell_probabilities(p, f)).exp()
                }
            })
            .collect();
        let h = 1.0 / grid as f64;
        let per_bin = grid / bins;
        let mut mass = vec![0.0; bins];
        for j in 0..grid {
            mass[j / per_bin] += 0.5 * h * (dens[j] + dens[j + 1]);
        }
        let z: f64 = mass.iter().sum();
        let tv: f64 = 0.5
            * hist
                .iter()
                .zip(&mass)
                .map(|(a, b)| (a - b / z).abs())
                .sum::<f64>();
        assert!(tv < 0.05, "total variation {tv}");
    }

    #[test]
    fn all_negative_replicate_pushes_f_to_zero() {
        let rep = ReplicateCounts::new("r", 0, 0, 0, 10_000);
        let mut s = one_rep_sampler(rep, 1.0, 0.5, 0.5);
        let mut r = rng(4);
        let mut fs = Vec::new();
        for t in 0..30_000 {
            let adapt = (t < 2000).then_some(t);
            if let Some(t) = adapt {
                let af = s.mh_update_f(0, &mut r);
                s.log_step_f[0] += ((t + 1) as f64).powf(-ADAPT_DECAY) * (af as u8 as f64 - 0.44);
            } else {
                s.mh_update_f(0, &mut r);
                fs.push(s.state().f[0]);
            }
        }
        assert!(median(&fs) < 0.05, "{}", median(&fs));
    }

    #[test]
    fn loading_recovered_from_negative_fraction() {
        let ds = Dataset::new(vec![ReplicateCounts::new("r", 2107, 834, 259, 6800)]);
        let cfg = SamplerConfig {
            model: ModelKind::Poisson,
            upper_bound: 200,
            burn_in: 500,
            thinning: 2,
            n_samples: 5000,
            seed: 5,
            ..Default::default()
        };
        let s = run_poisson_chain(&ds, &cfg).unwrap();
        let f = &s.f.as_ref().unwrap()[0];
        let expected = -(0.68f64).ln();
        assert!((median(f) - expected).abs() < 0.02, "{}", median(f));
        let acc = s.acceptance.unwrap();
        assert!(acc.f[0] > 0.1 && acc.f[0] < 0.8, "{:?}", acc);
    }

    #[test]
    fn initial_loading_is_inside_prior_support() {
        let all_neg = ReplicateCounts::new("a", 0, 0, 0, 100);
        let f = initial_loading(&all_neg, 1.0);
        assert!(f > 0.0 && f < 1.0);
        let none_neg = ReplicateCounts::new("b", 10, 10, 10, 0);
        let f = initial_loading(&none_neg, 1.0);
        assert!(f > 0.0 && f < 1.0);
        let f = initial_loading(&none_neg, 100.0);
        assert!((f + 1e-6f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn poisson_chain_reproducible() {
        let ds = Dataset::new(vec![
            ReplicateCounts::new("a", 30, 20, 5, 500),
            ReplicateCounts::new("b", 25, 22, 3, 480),
        ]);
        let cfg = SamplerConfig {
            model: ModelKind::Poisson,
            upper_bound: 100,
            burn_in: 20,
            thinning: 2,
            n_samples: 300,
            seed: 9,
            ..Default::default()
        };
        let a = run_poisson_chain(&ds, &cfg).unwrap();
        let b = run_poisson_chain(&ds, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.f.as_ref().unwrap()[1].len(), 300);
        assert!(run_poisson_chain(&ds, &SamplerConfig::default()).is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn cells_swap_under_reflection(p in 1e-6f64..(1.0 - 1e-6), f in 1e-6f64..20.0) {
                let c = cell_probabilities(p, f);
                let d = cell_probabilities(1.0 - p, f);
                prop_assert!((c.a_only - d.b_only).abs() < 1e-12);
                prop_assert!((c.b_only - d.a_only).abs() < 1e-12);
                prop_assert!((c.neg - d.neg).abs() < 1e-15);
                prop_assert!((c.double - d.double).abs() < 1e-12);
                prop_assert!((c.sum() - 1.0).abs() < 1e-12);
            }

            #[test]
            fn negative_cell_decreases_with_loading(p in 0.01f64..0.99, f in 0.01f64..10.0, df in 1e-3f64..5.0) {
                prop_assert!(cell_probabilities(p, f + df).neg < cell_probabilities(p, f).neg);
            }
        }
    }
}
