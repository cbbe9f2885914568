//! Text-memory retrieval world.
//!
//! Twenty sentence memories, a task distribution that shifts after
//! `phase1_end` episodes, retrieval by a blend of embedding cosine and
//! current MW, and keyword-match outcomes.

mod corpus;
mod embedding;

pub use corpus::{
    parse_memories, parse_tasks, Category, Corpus, Designation, Phase, TaskTemplate, TextMemory,
    BUILTIN_CORPUS, BUILTIN_TASKS, CORPUS_SIZE,
};
pub use embedding::{
    cosine, fallback_embed, load_embeddings, tokenize, EmbeddingTable, FALLBACK_DIM,
    FALLBACK_MODEL,
};

use std::collections::HashSet;
use std::io;

use rand::Rng;
use thiserror::Error;

use crate::estimator::{EstimatorError, MemoryId, MemoryStore, Outcome};
use crate::rng::StreamKey;
use crate::rows::{is_checkpoint, CheckpointRow, Experiment};

#[derive(Debug, Error)]
pub enum TextError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid corpus: {0}")]
    InvalidCorpus(String),
    #[error("text has no tokens: {0:?}")]
    NoTokens(String),
    #[error("embedding dimension must be >= 16, got {0}")]
    Dimension(usize),
    #[error("bad embedding header: {0:?}")]
    BadHeader(String),
    #[error("embedding for `{id}`: {msg}")]
    BadVector { id: String, msg: String },
    #[error("embedding file has no vector for `{0}`")]
    MissingId(String),
    #[error("invalid exp5 configuration: {0}")]
    Config(String),
    #[error("{0}: {1}")]
    Io(String, #[source] io::Error),
    #[error(transparent)]
    Estimator(#[from] EstimatorError),
}

/// Weights on embedding similarity and MW in the retrieval score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Blend {
    pub emb: f64,
    pub mw: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exp5Cfg {
    pub k: usize,
    pub n_episodes: u64,
    pub phase1_end: u64,
    pub blend_emb: f64,
    pub blend_mw: f64,
    pub checkpoint_every: u64,
}

impl Default for Exp5Cfg {
    fn default() -> Self {
        Exp5Cfg {
            k: 4,
            n_episodes: 3_000,
            phase1_end: 100,
            blend_emb: 0.6,
            blend_mw: 0.4,
            checkpoint_every: 50,
        }
    }
}

impl Exp5Cfg {
    pub fn blend(&self) -> Blend {
        Blend { emb: self.blend_emb, mw: self.blend_mw }
    }

    pub fn phase(&self, episode: u64) -> Phase {
        if episode <= self.phase1_end {
            Phase::One
        } else {
            Phase::Two
        }
    }

    pub fn validate(&self) -> Result<(), TextError> {
        if self.k == 0 || self.k > CORPUS_SIZE {
            return Err(TextError::Config(format!("k = {} must be in 1..={CORPUS_SIZE}", self.k)));
        }
        if ((self.blend_emb + self.blend_mw) - 1.0).abs() > 1e-9 || self.blend_emb < 0.0 || self.blend_mw < 0.0 {
            return Err(TextError::Config("blend weights must be nonnegative and sum to 1".into()));
        }
        if self.n_episodes == 0 || self.checkpoint_every == 0 {
            return Err(TextError::Config("n_episodes and checkpoint_every must be positive".into()));
        }
        Ok(())
    }
}

/// Top-`k` of `emb * cosines[i] + mw * mw_scores[i]`, ties broken by
/// lexicographic id.
pub fn top_k_blended(
    cosines: &[f64],
    mw_scores: &[f64],
    ids: &[&str],
    k: usize,
    blend: Blend,
) -> Vec<(MemoryId, f64)> {
    let mut scored: Vec<(MemoryId, f64)> = cosines
        .iter()
        .zip(mw_scores)
        .enumerate()
        .map(|(i, (c, m))| (MemoryId(i as u32), blend.emb * c + blend.mw * m))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| ids[a.0.index()].cmp(ids[b.0.index()])));
    scored.truncate(k);
    scored
}

/// Blended retrieval for one query vector. `memories[i]` is `MemoryId(i)`
/// in `store`; the table must cover every memory id.
pub fn retrieve_blended(
    query_vec: &[f64],
    table: &EmbeddingTable,
    memories: &[TextMemory],
    store: &MemoryStore,
    k: usize,
    blend: Blend,
) -> Vec<(MemoryId, f64)> {
    let cosines: Vec<f64> = memories
        .iter()
        .map(|m| cosine(query_vec, table.get(&m.id).expect("table covers every memory")))
        .collect();
    let ids: Vec<&str> = memories.iter().map(|m| m.id.as_str()).collect();
    top_k_blended(&cosines, &store.mw_vector(), &ids, k, blend)
}

/// Weighted draw of a template index active in `phase`.
pub fn sample_task(tasks: &[TaskTemplate], phase: Phase, u: f64) -> usize {
    let total: f64 = tasks.iter().map(|t| t.weight(phase)).sum();
    let mut target = u * total;
    let mut last = 0;
    for (i, t) in tasks.iter().enumerate() {
        let w = t.weight(phase);
        if w <= 0.0 {
            continue;
        }
        last = i;
        if target < w {
            return i;
        }
        target -= w;
    }
    last
}

/// One episode of the text world.
#[derive(Debug, Clone, PartialEq)]
pub struct TextEpisode {
    pub episode: u64,
    pub task: usize,
    pub retrieved: Vec<MemoryId>,
    pub outcome: Outcome,
}

/// Run the phase-shift world, calling `observe` after every update.
pub fn simulate_exp5<F>(
    cfg: &Exp5Cfg,
    corpus: &Corpus,
    table: &EmbeddingTable,
    seed: u64,
    mut observe: F,
) -> Result<MemoryStore, TextError>
where
    F: FnMut(&TextEpisode, &MemoryStore),
{
    cfg.validate()?;
    for id in corpus.ids() {
        if table.get(id).is_none() {
            return Err(TextError::MissingId(id.to_owned()));
        }
    }
    let n = corpus.memories.len();
    let ids: Vec<&str> = corpus.memories.iter().map(|m| m.id.as_str()).collect();
    let memory_tokens: Vec<HashSet<String>> = corpus
        .memories
        .iter()
        .map(|m| tokenize(&m.text).into_iter().collect())
        .collect();
    let task_cosines: Vec<Vec<f64>> = corpus
        .tasks
        .iter()
        .map(|t| {
            let q = table.get(&t.id).expect("checked above");
            corpus.memories.iter().map(|m| cosine(q, table.get(&m.id).expect("checked above"))).collect()
        })
        .collect();

    let task_stream = StreamKey::root(Experiment::Exp5.as_str(), seed).child("task");
    let weights = vec![1.0 / cfg.k as f64; cfg.k];
    let mut store = MemoryStore::new(n);
    for t in 1..=cfg.n_episodes {
        let task = sample_task(&corpus.tasks, cfg.phase(t), task_stream.rng(t).random::<f64>());
        let retrieved: Vec<MemoryId> = top_k_blended(&task_cosines[task], &store.mw_vector(), &ids, cfg.k, cfg.blend())
            .into_iter()
            .map(|(id, _)| id)
            .collect();
        let mut tokens: HashSet<String> = HashSet::new();
        for id in &retrieved {
            tokens.extend(memory_tokens[id.index()].iter().cloned());
        }
        let outcome = if corpus.tasks[task].is_satisfied(&tokens) { Outcome::Success } else { Outcome::Failure };
        store.update(&retrieved, &weights, outcome, None)?;
        observe(&TextEpisode { episode: t, task, retrieved, outcome }, &store);
    }
    Ok(store)
}

/// MW of each designated memory (`mw_stale`, `mw_specialist`,
/// `mw_hitchhiker`, `mw_control`) and the cumulative `success_rate` at
/// every checkpoint. The variant label is the embedding model name.
pub fn run_exp5(
    cfg: &Exp5Cfg,
    corpus: &Corpus,
    table: &EmbeddingTable,
    seed: u64,
) -> Result<Vec<CheckpointRow>, TextError> {
    let designated: Vec<(String, MemoryId)> = Designation::ALL
        .iter()
        .map(|&d| (format!("mw_{d}"), MemoryId(corpus.designated(d) as u32)))
        .collect();
    let mut rows = Vec::new();
    let mut successes = 0u64;
    simulate_exp5(cfg, corpus, table, seed, |ep, store| {
        if ep.outcome.is_success() {
            successes += 1;
        }
        if !is_checkpoint(ep.episode, cfg.n_episodes, cfg.checkpoint_every) {
            return;
        }
        for (metric, id) in &designated {
            rows.push(CheckpointRow::new(Experiment::Exp5, table.model.clone(), seed, ep.episode, metric.clone(), store.mw(*id)));
        }
        rows.push(CheckpointRow::new(
            Experiment::Exp5,
            table.model.clone(),
            seed,
            ep.episode,
            "success_rate",
            successes as f64 / ep.episode as f64,
        ));
    })?;
    Ok(rows)
}
