//! Co-retrieval confound: a useless hitchhiker rides along with a useful
//! anchor except in an "independent" fraction of episodes.

use rand::Rng;

use crate::estimator::{MemoryId, MemoryStore};
use crate::rows::{is_checkpoint, CheckpointRow, Experiment};

use super::{
    gaussian_noise, gen_utilities, outcome_exp1, uniform_subset, utilities_of, EpisodeRecord,
    Extension, WorldConfig, WorldError,
};

pub const ANCHOR: MemoryId = MemoryId(0);
pub const HITCHHIKER: MemoryId = MemoryId(1);

#[derive(Debug, Clone, PartialEq)]
pub struct Exp4Cfg {
    pub anchor_utility: f64,
    pub hitchhiker_utility: f64,
    pub independence_fractions: Vec<f64>,
}

impl Default for Exp4Cfg {
    fn default() -> Self {
        Exp4Cfg {
            anchor_utility: 0.90,
            hitchhiker_utility: 0.05,
            independence_fractions: vec![0.0, 0.1, 0.3, 0.5, 1.0],
        }
    }
}

impl Extension for Exp4Cfg {
    const EXPERIMENT: Experiment = Experiment::Exp4;

    fn override_utilities(&self, utilities: &mut [f64]) {
        utilities[ANCHOR.index()] = self.anchor_utility;
        utilities[HITCHHIKER.index()] = self.hitchhiker_utility;
    }

    fn validate(&self, n: usize, k: usize) -> Result<(), WorldError> {
        if k < 2 || n < k + 1 {
            return Err(WorldError::Config(format!("need k >= 2 and n_memories > k, got k = {k}, n = {n}")));
        }
        if self.independence_fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(WorldError::Config("independence fractions must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

pub fn fraction_label(f: f64) -> String {
    format!("frac={f:.2}")
}

/// Coupled episodes hold anchor, hitchhiker and `k - 2` random fillers;
/// independent ones hold the anchor and `k - 1` fillers.
pub fn exp4_episodes(
    cfg: &WorldConfig<Exp4Cfg>,
    utilities: &[f64],
    independence_fraction: f64,
    seed: u64,
) -> Vec<EpisodeRecord> {
    let root = cfg.root_key(seed);
    let (coupling, retrieval, noise, outcome) = (
        root.child("coupling"),
        root.child("retrieval"),
        root.child("noise"),
        root.child("outcome"),
    );
    let fillers = cfg.n_memories - 2;
    (1..=cfg.n_episodes)
        .map(|t| {
            let independent = coupling.rng(t).random::<f64>() < independence_fraction;
            let mut ids = vec![ANCHOR];
            let n_fill = if independent {
                cfg.k - 1
            } else {
                ids.push(HITCHHIKER);
                cfg.k - 2
            };
            ids.extend(uniform_subset(&mut retrieval.rng(t), fillers, n_fill, 2));
            let xi = gaussian_noise(noise, t, cfg.noise_sigma);
            let y = outcome_exp1(&utilities_of(&ids, utilities), xi, &mut outcome.rng(t));
            EpisodeRecord {
                episode_index: t,
                retrieved_ids: ids,
                similarity_scores: Vec::new(),
                outcome: y,
                context: None,
            }
        })
        .collect()
}

/// MW trajectories of anchor and hitchhiker (`mw_anchor`, `mw_hitchhiker`)
/// for each independence fraction, uniform weights.
pub fn run_exp4(
    cfg: &WorldConfig<Exp4Cfg>,
    independence_fractions: &[f64],
    seed: u64,
) -> Result<Vec<CheckpointRow>, WorldError> {
    cfg.validate()?;
    if independence_fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
        return Err(WorldError::Config("independence fractions must lie in [0, 1]".into()));
    }
    let utilities = gen_utilities(cfg, seed);
    let weights = vec![1.0 / cfg.k as f64; cfg.k];
    let mut rows = Vec::new();
    for &f in independence_fractions {
        let label = fraction_label(f);
        let mut store = MemoryStore::with_utilities(&utilities);
        for ep in exp4_episodes(cfg, &utilities, f, seed) {
            store.update(&ep.retrieved_ids, &weights, ep.outcome, None)?;
            let t = ep.episode_index;
            if is_checkpoint(t, cfg.n_episodes, cfg.checkpoint_every) {
                rows.push(CheckpointRow::new(Experiment::Exp4, label.clone(), seed, t, "mw_anchor", store.mw(ANCHOR)));
                rows.push(CheckpointRow::new(
                    Experiment::Exp4,
                    label.clone(),
                    seed,
                    t,
                    "mw_hitchhiker",
                    store.mw(HITCHHIKER),
                ));
            }
        }
    }
    Ok(rows)
}
