use std::fmt::Display;
use std::path::PathBuf;
use std::str::FromStr;

use crate::estimator::{WeightKind, WeightScheme, DEFAULT_W_MIN};
use crate::rows::Experiment;
use crate::synthworlds::{
    ConvergenceCfg, Exp1Cfg, Exp2Cfg, Exp3Cfg, Exp4Cfg, Strategy, WorldConfig,
};
use crate::textworld::{Exp5Cfg, FALLBACK_DIM};

use super::HarnessError;

/// Inputs of the text world beyond [`Exp5Cfg`]. Paths left unset fall back
/// to the built-in corpus and the hashing embedder.
#[derive(Debug, Clone, PartialEq)]
pub struct TextSetup {
    pub cfg: Exp5Cfg,
    pub corpus: Option<PathBuf>,
    pub tasks: Option<PathBuf>,
    pub embeddings: Option<PathBuf>,
    pub fallback_dim: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentConfig {
    Exp1 { world: WorldConfig<Exp1Cfg>, w_min: f64 },
    Exp2(WorldConfig<Exp2Cfg>),
    Exp3(WorldConfig<Exp3Cfg>),
    Exp4(WorldConfig<Exp4Cfg>),
    Exp5(TextSetup),
    Convergence(WorldConfig<ConvergenceCfg>),
}

impl ExperimentConfig {
    pub fn defaults(experiment: Experiment) -> Self {
        match experiment {
            Experiment::Exp1 => ExperimentConfig::Exp1 {
                world: WorldConfig::with_ext(Exp1Cfg::default()),
                w_min: DEFAULT_W_MIN,
            },
            Experiment::Exp2 => ExperimentConfig::Exp2(WorldConfig::with_ext(Exp2Cfg::default())),
            Experiment::Exp3 => ExperimentConfig::Exp3(WorldConfig::with_ext(Exp3Cfg::default())),
            Experiment::Exp4 => ExperimentConfig::Exp4(WorldConfig::with_ext(Exp4Cfg::default())),
            Experiment::Exp5 => ExperimentConfig::Exp5(TextSetup {
                cfg: Exp5Cfg::default(),
                corpus: None,
                tasks: None,
                embeddings: None,
                fallback_dim: FALLBACK_DIM,
            }),
            Experiment::Convergence => ExperimentConfig::Convergence(ConvergenceCfg::world()),
        }
    }

    pub fn experiment(&self) -> Experiment {
        match self {
            ExperimentConfig::Exp1 { .. } => Experiment::Exp1,
            ExperimentConfig::Exp2(_) => Experiment::Exp2,
            ExperimentConfig::Exp3(_) => Experiment::Exp3,
            ExperimentConfig::Exp4(_) => Experiment::Exp4,
            ExperimentConfig::Exp5(_) => Experiment::Exp5,
            ExperimentConfig::Convergence(_) => Experiment::Convergence,
        }
    }

    /// Apply one `experiment.field=value` override. The prefix must name
    /// this experiment.
    pub fn apply(&mut self, key: &str, value: &str) -> Result<(), HarnessError> {
        let bad = |msg: String| HarnessError::BadOverride { key: key.to_owned(), msg };
        let (prefix, field) = key
            .split_once('.')
            .ok_or_else(|| bad("expected `<experiment>.<field>`".into()))?;
        let experiment = self.experiment();
        if prefix != experiment.as_str() {
            return Err(bad(format!("prefix `{prefix}` does not match experiment `{experiment}`")));
        }
        let known = match self {
            ExperimentConfig::Exp1 { world, w_min } => {
                set_world(world, field, value, key)?
                    || match field {
                        "sim_target_r" => set(&mut world.ext.sim_target_r, value, key)?,
                        "w_min" => set(w_min, value, key)?,
                        _ => false,
                    }
            }
            ExperimentConfig::Exp2(world) => {
                set_world(world, field, value, key)?
                    || match field {
                        "n_generalists" => set(&mut world.ext.n_generalists, value, key)?,
                        "n_specialists" => set(&mut world.ext.n_specialists, value, key)?,
                        "specialist_utility" => set(&mut world.ext.specialist_utility, value, key)?,
                        "easy_base" => set(&mut world.ext.easy_base, value, key)?,
                        "hard_base" => set(&mut world.ext.hard_base, value, key)?,
                        "easy_fraction" => set(&mut world.ext.easy_fraction, value, key)?,
                        "utility_coupling" => set(&mut world.ext.utility_coupling, value, key)?,
                        _ => false,
                    }
            }
            ExperimentConfig::Exp3(world) => {
                set_world(world, field, value, key)?
                    || match field {
                        "temperature" => set(&mut world.ext.temperature, value, key)?,
                        "epsilon_floors" => set_list(&mut world.ext.epsilon_floors, value, key)?,
                        _ => false,
                    }
            }
            ExperimentConfig::Exp4(world) => {
                set_world(world, field, value, key)?
                    || match field {
                        "anchor_utility" => set(&mut world.ext.anchor_utility, value, key)?,
                        "hitchhiker_utility" => set(&mut world.ext.hitchhiker_utility, value, key)?,
                        "independence_fractions" => {
                            set_list(&mut world.ext.independence_fractions, value, key)?
                        }
                        _ => false,
                    }
            }
            ExperimentConfig::Convergence(world) => {
                set_world(world, field, value, key)?
                    || match field {
                        "success_probs" => set_list(&mut world.ext.success_probs, value, key)?,
                        _ => false,
                    }
            }
            ExperimentConfig::Exp5(text) => match field {
                "k" => set(&mut text.cfg.k, value, key)?,
                "n_episodes" => set(&mut text.cfg.n_episodes, value, key)?,
                "phase1_end" => set(&mut text.cfg.phase1_end, value, key)?,
                "blend_emb" => set(&mut text.cfg.blend_emb, value, key)?,
                "blend_mw" => set(&mut text.cfg.blend_mw, value, key)?,
                "checkpoint_every" => set(&mut text.cfg.checkpoint_every, value, key)?,
                "fallback_dim" => set(&mut text.fallback_dim, value, key)?,
                "corpus" => set_path(&mut text.corpus, value),
                "tasks" => set_path(&mut text.tasks, value),
                "embeddings" => set_path(&mut text.embeddings, value),
                _ => false,
            },
        };
        if known {
            Ok(())
        } else {
            Err(bad(format!("`{field}` is not a field of {experiment}")))
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let invalid = |e: &dyn Display| HarnessError::InvalidConfig(e.to_string());
        match self {
            ExperimentConfig::Exp1 { world, w_min } => {
                world.validate().map_err(|e| invalid(&e))?;
                WeightScheme::score_proportional(*w_min).map_err(|e| invalid(&e))?;
            }
            ExperimentConfig::Exp2(world) => world.validate().map_err(|e| invalid(&e))?,
            ExperimentConfig::Exp3(world) => world.validate().map_err(|e| invalid(&e))?,
            ExperimentConfig::Exp4(world) => world.validate().map_err(|e| invalid(&e))?,
            ExperimentConfig::Convergence(world) => world.validate().map_err(|e| invalid(&e))?,
            ExperimentConfig::Exp5(text) => text.cfg.validate().map_err(|e| invalid(&e))?,
        }
        Ok(())
    }
}

/// The four Exp 1 strategies with the similarity-weighted clip set to
/// `w_min`.
pub fn exp1_strategies(w_min: f64) -> Result<Vec<Strategy>, HarnessError> {
    let clipped = WeightScheme::score_proportional(w_min)
        .map_err(|e| HarnessError::InvalidConfig(e.to_string()))?;
    Ok(Strategy::defaults()
        .into_iter()
        .map(|mut s| {
            if s.scheme.kind == WeightKind::ScoreProportional {
                s.scheme = clipped;
            }
            s
        })
        .collect())
}

fn set_world<E>(world: &mut WorldConfig<E>, field: &str, value: &str, key: &str) -> Result<bool, HarnessError> {
    match field {
        "n_memories" => set(&mut world.n_memories, value, key),
        "k" => set(&mut world.k, value, key),
        "n_episodes" => set(&mut world.n_episodes, value, key),
        "noise_sigma" => set(&mut world.noise_sigma, value, key),
        "checkpoint_every" => set(&mut world.checkpoint_every, value, key),
        _ => Ok(false),
    }
}

fn set<T: FromStr>(slot: &mut T, value: &str, key: &str) -> Result<bool, HarnessError>
where
    T::Err: Display,
{
    *slot = value.trim().parse().map_err(|e: T::Err| HarnessError::BadOverride {
        key: key.to_owned(),
        msg: format!("`{value}`: {e}"),
    })?;
    Ok(true)
}

fn set_list(slot: &mut Vec<f64>, value: &str, key: &str) -> Result<bool, HarnessError> {
    let mut out = Vec::new();
    for part in value.split(',').filter(|p| !p.trim().is_empty()) {
        let mut x = 0.0;
        set(&mut x, part, key)?;
        out.push(x);
    }
    if out.is_empty() {
        return Err(HarnessError::BadOverride { key: key.to_owned(), msg: "empty list".into() });
    }
    *slot = out;
    Ok(true)
}

fn set_path(slot: &mut Option<PathBuf>, value: &str) -> bool {
    *slot = Some(PathBuf::from(value));
    true
}
