//! Hierarchical Bayesian estimation of ratios and proportions from
//! replicated droplet digital PCR (ddPCR) counts.
//!
//! Two samplers are provided:
//!
//! * [`gibbs`]: a beta-binomial hierarchy where each replicate's fraction
//!   `p_i ~ Beta(alpha, beta)` and the A-positive count is binomial given the
//!   number of positive droplets. `alpha` and `beta` are discretized onto the
//!   integer grid `1..=M` and drawn exactly from their full conditionals.
//! * [`poisson`]: droplets receive Poisson-distributed amplicon loads and the
//!   four droplet classes are multinomial. Per-replicate `(p_i, f_i)` are
//!   updated by random-walk Metropolis; `alpha`, `beta` reuse the discrete
//!   conditionals.
//!
//! [`posterior`] turns draws into medians, equal-tailed intervals and
//! probability queries; [`synthetic`] simulates droplet data forward.

pub mod chain;
pub mod error;
pub mod gibbs;
pub mod mode;
pub mod model;
pub mod poisson;
pub mod posterior;
pub mod synthetic;

pub use chain::{run_chain, run_chains, run_with_auto_bound, AutoBoundRun};
pub use error::{Error, Result};
pub use model::{
    effective_counts, validate_dataset, Dataset, DoublePositivePolicy, EffectiveCounts, ModelKind,
    PosteriorSamples, ReplicateCounts, SamplerConfig,
};
pub use posterior::{PosteriorSummary, Quantity};
