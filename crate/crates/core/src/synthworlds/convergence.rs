//! Fixed-success-probability worlds for checking that MW converges to the
//! post-retrieval success rate when retrieval and outcome are independent.
//!
//! `k` of `n_memories` are retrieved uniformly each episode (retrieval
//! probability `k / n`, weight `1 / k`) and the outcome is an independent
//! Bernoulli(p) draw, so every memory has `p+ = p`.

use rand::Rng;

use crate::estimator::{MemoryStore, Outcome};
use crate::rows::{is_checkpoint, CheckpointRow, Experiment};

use super::{uniform_subset, Extension, WorldConfig, WorldError};

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceCfg {
    pub success_probs: Vec<f64>,
}

impl Default for ConvergenceCfg {
    fn default() -> Self {
        ConvergenceCfg { success_probs: vec![0.1, 0.5, 0.9] }
    }
}

impl Extension for ConvergenceCfg {
    const EXPERIMENT: Experiment = Experiment::Convergence;

    fn validate(&self, _n: usize, _k: usize) -> Result<(), WorldError> {
        if self.success_probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return Err(WorldError::Config("success probabilities must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

impl ConvergenceCfg {
    /// 40 memories, k = 8 (retrieval probability 0.2, weight 0.125),
    /// 50,000 episodes.
    pub fn world() -> WorldConfig<ConvergenceCfg> {
        WorldConfig {
            n_memories: 40,
            k: 8,
            n_episodes: 50_000,
            noise_sigma: 0.0,
            checkpoint_every: 500,
            ext: ConvergenceCfg::default(),
        }
    }
}

pub fn prob_label(p: f64) -> String {
    format!("p={p:.2}")
}

/// Per checkpoint and success probability: `max_abs_err` and
/// `mean_abs_err` of MW against p over all memories, and `mean_evidence`.
pub fn run_convergence(cfg: &WorldConfig<ConvergenceCfg>, seed: u64) -> Result<Vec<CheckpointRow>, WorldError> {
    cfg.validate()?;
    let root = cfg.root_key(seed);
    let (retrieval, outcome) = (root.child("retrieval"), root.child("outcome"));
    let weights = vec![1.0 / cfg.k as f64; cfg.k];
    let mut rows = Vec::new();
    for &p in &cfg.ext.success_probs {
        let label = prob_label(p);
        let mut store = MemoryStore::new(cfg.n_memories);
        for t in 1..=cfg.n_episodes {
            let ids = uniform_subset(&mut retrieval.rng(t), cfg.n_memories, cfg.k, 0);
            let y = if outcome.rng(t).random::<f64>() < p { Outcome::Success } else { Outcome::Failure };
            store.update(&ids, &weights, y, None)?;
            if !is_checkpoint(t, cfg.n_episodes, cfg.checkpoint_every) {
                continue;
            }
            let errs: Vec<f64> = store.mw_vector().iter().map(|m| (m - p).abs()).collect();
            let max = errs.iter().copied().fold(0.0, f64::max);
            let mean = errs.iter().sum::<f64>() / errs.len() as f64;
            let evidence = store.total_evidence() / cfg.n_memories as f64;
            for (metric, value) in [("max_abs_err", max), ("mean_abs_err", mean), ("mean_evidence", evidence)] {
                rows.push(CheckpointRow::new(Experiment::Convergence, label.clone(), seed, t, metric, value));
            }
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evidence_accumulates_at_retrieval_rate() {
        let cfg = WorldConfig { n_episodes: 1_000, ..ConvergenceCfg::world() };
        let rows = run_convergence(&cfg, 0).unwrap();
        let ev = rows
            .iter()
            .find(|r| r.episode == 1_000 && r.metric == "mean_evidence")
            .unwrap();
        // 1000 episodes * 0.2 retrieval probability * 0.125 weight.
        assert!((ev.value - 25.0).abs() < 1e-9);
    }
}
