//! Synthetic experiment environments.
//!
//! Each world is a pure function of `(config, seed)`. All randomness is
//! drawn from named [`StreamKey`] streams indexed by episode, so the same
//! seed always produces the same retrievals, noise and outcomes no matter
//! how many strategies consume them.

mod convergence;
mod exp1;
mod exp2;
mod exp3;
mod exp4;

pub use convergence::{prob_label, run_convergence, ConvergenceCfg};
pub use exp1::{exp1_world, run_exp1, Exp1Cfg, Exp1World, Strategy, BETA_BERNOULLI};
pub use exp2::{exp2_world, run_exp2, Exp2Cfg, Exp2World, EASY, HARD};
pub use exp3::{epsilon_label, run_exp3, softmax_policy, Exp3Cfg, UNIFORM_REFERENCE};
pub use exp4::{exp4_episodes, fraction_label, run_exp4, Exp4Cfg, ANCHOR, HITCHHIKER};

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::estimator::{EstimatorError, MemoryId, Outcome};
use crate::metrics::{pearson, MetricsError};
use crate::rng::{SplitMix64, StreamKey};
use crate::rows::Experiment;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("invalid world configuration: {0}")]
    Config(String),
    #[error("similarity proxy: no draw within {tol} of r = {target} after {attempts} attempts")]
    ProxyUnreachable { target: f64, tol: f64, attempts: u32 },
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Parameters shared by every synthetic world, plus an experiment-specific
/// extension.
#[derive(Debug, Clone, PartialEq)]
pub struct WorldConfig<E> {
    pub n_memories: usize,
    pub k: usize,
    pub n_episodes: u64,
    pub noise_sigma: f64,
    pub checkpoint_every: u64,
    pub ext: E,
}

/// Experiment-specific part of a [`WorldConfig`].
pub trait Extension {
    const EXPERIMENT: Experiment;

    /// Replace designated entries of the base Uniform(0,1) utilities.
    fn override_utilities(&self, _utilities: &mut [f64]) {}

    fn validate(&self, _n_memories: usize, _k: usize) -> Result<(), WorldError> {
        Ok(())
    }
}

impl<E: Extension> WorldConfig<E> {
    pub fn with_ext(ext: E) -> Self {
        WorldConfig {
            n_memories: 100,
            k: 8,
            n_episodes: 10_000,
            noise_sigma: 0.10,
            checkpoint_every: 500,
            ext,
        }
    }

    pub fn validate(&self) -> Result<(), WorldError> {
        if self.k == 0 || self.k > self.n_memories {
            return Err(WorldError::Config(format!(
                "k = {} must be in 1..={}",
                self.k, self.n_memories
            )));
        }
        if self.n_episodes == 0 || self.checkpoint_every == 0 {
            return Err(WorldError::Config(
                "n_episodes and checkpoint_every must be positive".into(),
            ));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(WorldError::Config(format!("noise_sigma = {}", self.noise_sigma)));
        }
        self.ext.validate(self.n_memories, self.k)
    }

    pub fn root_key(&self, seed: u64) -> StreamKey {
        StreamKey::root(E::EXPERIMENT.as_str(), seed)
    }
}

/// One episode of a synthetic world.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord {
    /// 1-based.
    pub episode_index: u64,
    pub retrieved_ids: Vec<MemoryId>,
    /// Policy scores aligned with `retrieved_ids` (empty when the policy
    /// has none).
    pub similarity_scores: Vec<f64>,
    pub outcome: Outcome,
    pub context: Option<&'static str>,
}

/// Uniform(0,1) utilities from the `"utilities"` stream, then the
/// extension's overrides.
pub fn gen_utilities<E: Extension>(cfg: &WorldConfig<E>, seed: u64) -> Vec<f64> {
    let key = cfg.root_key(seed).child("utilities");
    let mut u: Vec<f64> = (0..cfg.n_memories as u64)
        .map(|i| key.rng(i).random::<f64>())
        .collect();
    cfg.ext.override_utilities(&mut u);
    u
}

const PROXY_FLOOR: f64 = 0.01;
const PROXY_TOL: f64 = 0.10;
const PROXY_ATTEMPTS: u32 = 100;

/// Similarity proxy correlated with `utilities` at roughly `target_r`.
///
/// `r * z(U) + sqrt(1 - r^2) * eta`, min-max rescaled to `[0.01, 1]`;
/// resampled from a fresh sub-stream until the empirical Pearson r lies
/// within 0.10 of the target.
pub fn gen_similarity_proxy(
    utilities: &[f64],
    target_r: f64,
    key: StreamKey,
) -> Result<Vec<f64>, WorldError> {
    if !(target_r > 0.0 && target_r < 1.0) {
        return Err(WorldError::Config(format!("target_r = {target_r} must lie in (0, 1)")));
    }
    if utilities.len() < 2 {
        return Err(WorldError::Config("similarity proxy needs at least two memories".into()));
    }
    let n = utilities.len() as f64;
    let mean = utilities.iter().sum::<f64>() / n;
    let sd = (utilities.iter().map(|u| (u - mean).powi(2)).sum::<f64>() / n).sqrt();
    let z: Vec<f64> = utilities
        .iter()
        .map(|u| if sd > 0.0 { (u - mean) / sd } else { 0.0 })
        .collect();
    let noise_scale = (1.0 - target_r * target_r).sqrt();

    for attempt in 0..PROXY_ATTEMPTS {
        let sub = key.indexed(u64::from(attempt));
        let raw: Vec<f64> = z
            .iter()
            .enumerate()
            .map(|(i, zi)| {
                let eta: f64 = sub.rng(i as u64).sample(StandardNormal);
                target_r * zi + noise_scale * eta
            })
            .collect();
        let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        let proxy: Vec<f64> = raw
            .iter()
            .map(|x| {
                if span > 0.0 {
                    PROXY_FLOOR + (1.0 - PROXY_FLOOR) * (x - lo) / span
                } else {
                    1.0
                }
            })
            .collect();
        let r = pearson(&proxy, utilities)?;
        if (r - target_r).abs() <= PROXY_TOL {
            return Ok(proxy);
        }
    }
    Err(WorldError::ProxyUnreachable {
        target: target_r,
        tol: PROXY_TOL,
        attempts: PROXY_ATTEMPTS,
    })
}

/// Success probability `clip(mean(utilities) + noise, 0, 1)`.
pub fn success_prob(retrieved_utilities: &[f64], noise: f64) -> f64 {
    let mean = retrieved_utilities.iter().sum::<f64>() / retrieved_utilities.len() as f64;
    (mean + noise).clamp(0.0, 1.0)
}

/// Draw the Exp-1 style outcome for one retrieval set.
pub fn outcome_exp1<R: Rng>(retrieved_utilities: &[f64], noise: f64, rng: &mut R) -> Outcome {
    bernoulli_outcome(success_prob(retrieved_utilities, noise), rng)
}

pub(crate) fn bernoulli_outcome<R: Rng>(p: f64, rng: &mut R) -> Outcome {
    if rng.random::<f64>() < p {
        Outcome::Success
    } else {
        Outcome::Failure
    }
}

pub(crate) fn gaussian_noise(key: StreamKey, episode: u64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        return 0.0;
    }
    let z: f64 = key.rng(episode).sample(StandardNormal);
    sigma * z
}

/// Uniform-random `k`-subset of `0..n`, offset by `base`.
pub(crate) fn uniform_subset(rng: &mut SplitMix64, n: usize, k: usize, base: usize) -> Vec<MemoryId> {
    rand::seq::index::sample(rng, n, k)
        .into_iter()
        .map(|i| MemoryId((i + base) as u32))
        .collect()
}

pub(crate) fn utilities_of(ids: &[MemoryId], utilities: &[f64]) -> Vec<f64> {
    ids.iter().map(|id| utilities[id.index()]).collect()
}
