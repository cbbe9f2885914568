//! Calibration world: uniform random retrieval, outcomes driven by the mean
//! utility of the retrieved set.

use crate::estimator::{
    beta_posterior_mean, classify, compute_weights, MemoryStore, TaxonomyConfig, TaxonomyLabel,
    WeightKind, WeightScheme,
};
use crate::metrics::spearman_rho;
use crate::rows::{is_checkpoint, CheckpointRow, Experiment};

use super::{
    gaussian_noise, gen_similarity_proxy, gen_utilities, outcome_exp1, uniform_subset,
    utilities_of, EpisodeRecord, Extension, WorldConfig, WorldError,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Exp1Cfg {
    pub sim_target_r: f64,
}

impl Default for Exp1Cfg {
    fn default() -> Self {
        Exp1Cfg { sim_target_r: 0.65 }
    }
}

impl Extension for Exp1Cfg {
    const EXPERIMENT: Experiment = Experiment::Exp1;

    fn validate(&self, _n: usize, _k: usize) -> Result<(), WorldError> {
        if self.sim_target_r > 0.0 && self.sim_target_r < 1.0 {
            Ok(())
        } else {
            Err(WorldError::Config(format!("sim_target_r = {}", self.sim_target_r)))
        }
    }
}

/// A labelled weighting strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct Strategy {
    pub label: String,
    pub scheme: WeightScheme,
}

impl Strategy {
    pub fn new(label: impl Into<String>, scheme: WeightScheme) -> Self {
        Strategy { label: label.into(), scheme }
    }

    /// No update, uniform, similarity-weighted, oracle.
    pub fn defaults() -> Vec<Strategy> {
        vec![
            Strategy::new("no_update", WeightScheme::none()),
            Strategy::new("uniform", WeightScheme::uniform()),
            Strategy::new("sim_weighted", WeightScheme::new(WeightKind::ScoreProportional)),
            Strategy::new("oracle", WeightScheme::oracle()),
        ]
    }
}

/// Label of the Beta-Bernoulli series, computed from the uniform store.
pub const BETA_BERNOULLI: &str = "beta_bernoulli";

/// A materialized Exp-1 world: ground truth plus the full episode stream.
#[derive(Debug, Clone)]
pub struct Exp1World {
    pub utilities: Vec<f64>,
    pub similarity: Vec<f64>,
    pub episodes: Vec<EpisodeRecord>,
}

pub fn exp1_world(cfg: &WorldConfig<Exp1Cfg>, seed: u64) -> Result<Exp1World, WorldError> {
    cfg.validate()?;
    let root = cfg.root_key(seed);
    let utilities = gen_utilities(cfg, seed);
    let similarity = gen_similarity_proxy(&utilities, cfg.ext.sim_target_r, root.child("simproxy"))?;
    let (retrieval, noise, outcome) = (root.child("retrieval"), root.child("noise"), root.child("outcome"));

    let episodes = (1..=cfg.n_episodes)
        .map(|t| {
            let ids = uniform_subset(&mut retrieval.rng(t), cfg.n_memories, cfg.k, 0);
            let xi = gaussian_noise(noise, t, cfg.noise_sigma);
            let y = outcome_exp1(&utilities_of(&ids, &utilities), xi, &mut outcome.rng(t));
            EpisodeRecord {
                episode_index: t,
                similarity_scores: utilities_of(&ids, &similarity),
                retrieved_ids: ids,
                outcome: y,
                context: None,
            }
        })
        .collect();
    Ok(Exp1World { utilities, similarity, episodes })
}

/// Replay one Exp-1 world against every strategy's private store.
///
/// Per checkpoint and strategy: `rho` (Spearman of MW vs true utility),
/// `low_value` (count under the default taxonomy) and `gate_violations`
/// (memories below the evidence floor labelled anything but uncertain).
/// When a uniform strategy is present its store also yields the
/// Beta-Bernoulli `rho` series.
pub fn run_exp1(
    cfg: &WorldConfig<Exp1Cfg>,
    strategies: &[Strategy],
    seed: u64,
) -> Result<Vec<CheckpointRow>, WorldError> {
    if strategies.is_empty() {
        return Err(WorldError::Config("at least one strategy is required".into()));
    }
    let world = exp1_world(cfg, seed)?;
    let taxonomy = TaxonomyConfig::default();
    let mut stores: Vec<MemoryStore> = strategies
        .iter()
        .map(|_| MemoryStore::with_utilities(&world.utilities))
        .collect();
    let mut rows = Vec::new();
    let row = |variant: &str, episode: u64, metric: &str, value: f64| {
        CheckpointRow::new(Experiment::Exp1, variant, seed, episode, metric, value)
    };

    for ep in &world.episodes {
        for (strategy, store) in strategies.iter().zip(stores.iter_mut()) {
            let scores: Vec<_> = match strategy.scheme.kind {
                WeightKind::Oracle => utilities_of(&ep.retrieved_ids, &world.utilities),
                _ => ep.similarity_scores.clone(),
            };
            let scored: Vec<_> = ep.retrieved_ids.iter().copied().zip(scores).collect();
            if let Some(w) = compute_weights(&strategy.scheme, &scored)? {
                store.update(&ep.retrieved_ids, &w, ep.outcome, None)?;
            }
        }

        let t = ep.episode_index;
        if !is_checkpoint(t, cfg.n_episodes, cfg.checkpoint_every) {
            continue;
        }
        for (strategy, store) in strategies.iter().zip(&stores) {
            let rho = spearman_rho(&store.mw_vector(), &world.utilities)?;
            let mut low = 0usize;
            let mut violations = 0usize;
            for r in store.records() {
                let label = classify(r, &taxonomy);
                if label == TaxonomyLabel::LowValue {
                    low += 1;
                }
                if r.evidence() < taxonomy.v_min && label != TaxonomyLabel::Uncertain {
                    violations += 1;
                }
            }
            rows.push(row(&strategy.label, t, "rho", rho));
            rows.push(row(&strategy.label, t, "low_value", low as f64));
            rows.push(row(&strategy.label, t, "gate_violations", violations as f64));

            if strategy.scheme.kind == WeightKind::Uniform {
                let post: Vec<f64> = store
                    .records()
                    .iter()
                    .map(|r| beta_posterior_mean(r, 1.0, 1.0))
                    .collect();
                rows.push(row(BETA_BERNOULLI, t, "rho", spearman_rho(&post, &world.utilities)?));
            }
        }
    }
    Ok(rows)
}
