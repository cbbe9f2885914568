//! Retrieval feedback loop: a softmax policy over live MW scores picks the
//! retrieval set, so the estimator shapes its own evidence.

use rand::Rng;

use crate::estimator::{MemoryId, MemoryStore};
use crate::metrics::spearman_rho;
use crate::rng::SplitMix64;
use crate::rows::{is_checkpoint, CheckpointRow, Experiment};

use super::{
    gaussian_noise, gen_utilities, outcome_exp1, uniform_subset, utilities_of, Extension,
    WorldConfig, WorldError,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Exp3Cfg {
    pub temperature: f64,
    pub epsilon_floors: Vec<f64>,
}

impl Default for Exp3Cfg {
    fn default() -> Self {
        Exp3Cfg { temperature: 3.0, epsilon_floors: vec![0.00, 0.05, 0.10] }
    }
}

impl Extension for Exp3Cfg {
    const EXPERIMENT: Experiment = Experiment::Exp3;

    fn validate(&self, _n: usize, _k: usize) -> Result<(), WorldError> {
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(WorldError::Config(format!("temperature = {}", self.temperature)));
        }
        if self.epsilon_floors.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(WorldError::Config("epsilon floors must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// With probability `epsilon_floor` a uniform-random `k`-subset; otherwise
/// `k` distinct memories drawn sequentially without replacement with
/// probability proportional to `exp(temperature * mw)`.
pub fn softmax_policy(
    mw_scores: &[f64],
    temperature: f64,
    epsilon_floor: f64,
    k: usize,
    rng: &mut SplitMix64,
) -> Vec<MemoryId> {
    let n = mw_scores.len();
    if rng.random::<f64>() < epsilon_floor {
        return uniform_subset(rng, n, k, 0);
    }
    // Shift by the max so large temperatures don't overflow.
    let top = mw_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut weights: Vec<f64> = mw_scores.iter().map(|m| ((m - top) * temperature).exp()).collect();
    let mut picked = Vec::with_capacity(k);
    for _ in 0..k {
        let total: f64 = weights.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut choice = None;
        for (i, &w) in weights.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            choice = Some(i);
            if target < w {
                break;
            }
            target -= w;
        }
        // `choice` falls back to the last live entry on rounding overshoot.
        let i = choice.expect("fewer than k memories with positive weight");
        weights[i] = 0.0;
        picked.push(MemoryId(i as u32));
    }
    picked
}

/// Label of the uniform-retrieval reference series.
pub const UNIFORM_REFERENCE: &str = "uniform";

pub fn epsilon_label(eps: f64) -> String {
    format!("eps={eps:.2}")
}

/// One run per epsilon floor plus a uniform-retrieval reference, all on
/// the same utilities, noise and outcome draws. Metric `rho` per checkpoint.
pub fn run_exp3(cfg: &WorldConfig<Exp3Cfg>, seed: u64) -> Result<Vec<CheckpointRow>, WorldError> {
    cfg.validate()?;
    let root = cfg.root_key(seed);
    let utilities = gen_utilities(cfg, seed);
    let (policy, noise, outcome) = (root.child("policy"), root.child("noise"), root.child("outcome"));
    let weights = vec![1.0 / cfg.k as f64; cfg.k];

    let mut variants: Vec<(String, f64)> = cfg
        .ext
        .epsilon_floors
        .iter()
        .map(|&e| (epsilon_label(e), e))
        .collect();
    variants.push((UNIFORM_REFERENCE.to_owned(), 1.0));

    let mut rows = Vec::new();
    for (label, eps) in variants {
        let mut store = MemoryStore::with_utilities(&utilities);
        for t in 1..=cfg.n_episodes {
            let ids = softmax_policy(&store.mw_vector(), cfg.ext.temperature, eps, cfg.k, &mut policy.rng(t));
            let xi = gaussian_noise(noise, t, cfg.noise_sigma);
            let y = outcome_exp1(&utilities_of(&ids, &utilities), xi, &mut outcome.rng(t));
            store.update(&ids, &weights, y, None)?;
            if is_checkpoint(t, cfg.n_episodes, cfg.checkpoint_every) {
                let rho = spearman_rho(&store.mw_vector(), &utilities)?;
                rows.push(CheckpointRow::new(Experiment::Exp3, label.clone(), seed, t, "rho", rho));
            }
        }
    }
    Ok(rows)
}
