use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Exp1,
    Exp2,
    Exp3,
    Exp4,
    Exp5,
    Convergence,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::Exp1,
        Experiment::Exp2,
        Experiment::Exp3,
        Experiment::Exp4,
        Experiment::Exp5,
        Experiment::Convergence,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Experiment::Exp1 => "exp1",
            Experiment::Exp2 => "exp2",
            Experiment::Exp3 => "exp3",
            Experiment::Exp4 => "exp4",
            Experiment::Exp5 => "exp5",
            Experiment::Convergence => "convergence",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

/// One measured value: the unit of all CSV output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointRow {
    pub experiment: Experiment,
    pub variant: String,
    pub seed: u64,
    pub episode: u64,
    pub metric: String,
    pub value: f64,
}

impl CheckpointRow {
    pub fn new(
        experiment: Experiment,
        variant: impl Into<String>,
        seed: u64,
        episode: u64,
        metric: impl Into<String>,
        value: f64,
    ) -> Self {
        CheckpointRow {
            experiment,
            variant: variant.into(),
            seed,
            episode,
            metric: metric.into(),
            value,
        }
    }
}

/// Canonical raw.csv ordering: variant, seed, episode, metric.
pub fn sort_rows(rows: &mut [CheckpointRow]) {
    rows.sort_by(|a, b| {
        (a.experiment, &a.variant, a.seed, a.episode, &a.metric)
            .cmp(&(b.experiment, &b.variant, b.seed, b.episode, &b.metric))
    });
}

/// Episodes at which a run of `n_episodes` reports: every multiple of
/// `every`, plus the final episode.
pub fn checkpoint_episodes(n_episodes: u64, every: u64) -> Vec<u64> {
    let every = every.max(1);
    let mut eps: Vec<u64> = (1..=n_episodes / every).map(|i| i * every).collect();
    if eps.last() != Some(&n_episodes) && n_episodes > 0 {
        eps.push(n_episodes);
    }
    eps
}

pub fn is_checkpoint(episode: u64, n_episodes: u64, every: u64) -> bool {
    episode == n_episodes || (every > 0 && episode.is_multiple_of(every))
}
