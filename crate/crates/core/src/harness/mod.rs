//! Seed sweeps, CSV artifacts, plots and criterion checks.
//!
//! A [`RunManifest`] names one experiment, its seeds and its overrides.
//! [`run`] fans the seeds out over a bounded thread pool, merges the rows in
//! canonical order and writes `raw.csv`, `summary.csv` and optionally one
//! SVG chart per figure into `<output_dir>/<experiment>/`.

mod config;
mod criteria;
mod plot;

pub use config::{exp1_strategies, ExperimentConfig, TextSetup};
pub use criteria::{evaluate, CriterionResult, Source};
pub use plot::{figures, render_figures, Figure};

use std::collections::{BTreeMap, BTreeSet};
use std::fs::{self, File};
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::metrics::aggregate_over_seeds;
use crate::rows::{sort_rows, CheckpointRow, Experiment};
use crate::synthworlds::{run_convergence, run_exp1, run_exp2, run_exp3, run_exp4, WorldError};
use crate::textworld::{load_embeddings, run_exp5, Corpus, EmbeddingTable, TextError};

pub const RAW_CSV: &str = "raw.csv";
pub const SUMMARY_CSV: &str = "summary.csv";
pub const MANIFEST_TXT: &str = "manifest.txt";

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid override `{key}`: {msg}")]
    BadOverride { key: String, msg: String },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid seeds `{0}`")]
    BadSeeds(String),
    #[error("cannot write {path}: {source}")]
    Output { path: PathBuf, source: io::Error },
    #[error("no {RAW_CSV} at {0}; run the experiment first")]
    MissingRaw(PathBuf),
    #[error("{path}: {msg}")]
    Input { path: PathBuf, msg: String },
    #[error("plot {path}: {msg}")]
    Plot { path: PathBuf, msg: String },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error("thread pool: {0}")]
    Pool(String),
}

impl HarnessError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::BadOverride { .. } | HarnessError::InvalidConfig(_) | HarnessError::BadSeeds(_) => 2,
            HarnessError::Output { .. } | HarnessError::Plot { .. } => 3,
            HarnessError::MissingRaw(_) => 4,
            _ => 1,
        }
    }
}

fn output_err(path: &Path) -> impl FnOnce(io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Output { path: path.to_owned(), source }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub experiment: Experiment,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    pub overrides: BTreeMap<String, String>,
    pub emit_plots: bool,
}

impl RunManifest {
    pub fn new(experiment: Experiment, output_dir: impl Into<PathBuf>) -> Self {
        RunManifest {
            experiment,
            seeds: (0..20).collect(),
            output_dir: output_dir.into(),
            overrides: BTreeMap::new(),
            emit_plots: false,
        }
    }

    pub fn experiment_dir(&self) -> PathBuf {
        self.output_dir.join(self.experiment.as_str())
    }

    pub fn config(&self) -> Result<ExperimentConfig, HarnessError> {
        let mut cfg = ExperimentConfig::defaults(self.experiment);
        for (k, v) in &self.overrides {
            cfg.apply(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.seeds.is_empty() {
            return Err(HarnessError::BadSeeds("no seeds".into()));
        }
        let distinct: BTreeSet<_> = self.seeds.iter().collect();
        if distinct.len() != self.seeds.len() {
            return Err(HarnessError::BadSeeds("seeds must be distinct".into()));
        }
        Ok(())
    }

    /// Shell-style one-liner that reproduces this manifest.
    pub fn describe(&self) -> String {
        let mut s = format!("run {} --seeds {}", self.experiment, format_seeds(&self.seeds));
        for (k, v) in &self.overrides {
            s.push_str(&format!(" --set {k}={v}"));
        }
        if self.emit_plots {
            s.push_str(" --plots");
        }
        s
    }
}

/// `a..b` (inclusive), a single seed, or a comma-separated list of either.
pub fn parse_seeds(text: &str) -> Result<Vec<u64>, HarnessError> {
    let bad = || HarnessError::BadSeeds(text.to_owned());
    let mut seeds = Vec::new();
    for part in text.split(',').map(str::trim) {
        if let Some((a, b)) = part.split_once("..") {
            let a: u64 = a.trim().parse().map_err(|_| bad())?;
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            if b < a {
                return Err(bad());
            }
            seeds.extend(a..=b);
        } else {
            seeds.push(part.parse().map_err(|_| bad())?);
        }
    }
    let distinct: BTreeSet<_> = seeds.iter().collect();
    if seeds.is_empty() || distinct.len() != seeds.len() {
        return Err(bad());
    }
    Ok(seeds)
}

fn format_seeds(seeds: &[u64]) -> String {
    let contiguous = seeds.windows(2).all(|w| w[1] == w[0] + 1);
    match (seeds.first(), seeds.last()) {
        (Some(a), Some(b)) if contiguous && seeds.len() > 1 => format!("{a}..{b}"),
        _ => seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","),
    }
}

/// `key=value` from a `--set` flag.
pub fn parse_override(s: &str) -> Result<(String, String), HarnessError> {
    match s.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim().to_owned(), v.trim().to_owned())),
        _ => Err(HarnessError::BadOverride { key: s.to_owned(), msg: "expected key=value".into() }),
    }
}

/// A validated configuration with any file inputs already loaded, ready to
/// run seeds concurrently.
pub struct Runner {
    config: ExperimentConfig,
    text: Option<(Corpus, EmbeddingTable)>,
}

impl Runner {
    pub fn new(config: ExperimentConfig) -> Result<Self, HarnessError> {
        config.validate()?;
        let text = match &config {
            ExperimentConfig::Exp5(setup) => Some(load_text(setup)?),
            _ => None,
        };
        Ok(Runner { config, text })
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    pub fn run_seed(&self, seed: u64) -> Result<Vec<CheckpointRow>, HarnessError> {
        let rows = match &self.config {
            ExperimentConfig::Exp1 { world, w_min } => run_exp1(world, &exp1_strategies(*w_min)?, seed)?,
            ExperimentConfig::Exp2(world) => run_exp2(world, seed)?,
            ExperimentConfig::Exp3(world) => run_exp3(world, seed)?,
            ExperimentConfig::Exp4(world) => run_exp4(world, &world.ext.independence_fractions, seed)?,
            ExperimentConfig::Convergence(world) => run_convergence(world, seed)?,
            ExperimentConfig::Exp5(setup) => {
                let (corpus, table) = self.text.as_ref().expect("text inputs loaded in Runner::new");
                run_exp5(&setup.cfg, corpus, table, seed)?
            }
        };
        Ok(rows)
    }

    /// Every seed on a pool of at most `jobs` threads; rows come back in
    /// canonical order regardless of scheduling.
    pub fn run_seeds(&self, seeds: &[u64], jobs: usize) -> Result<Vec<CheckpointRow>, HarnessError> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.max(1))
            .build()
            .map_err(|e| HarnessError::Pool(e.to_string()))?;
        let per_seed: Vec<Vec<CheckpointRow>> =
            pool.install(|| seeds.par_iter().map(|&s| self.run_seed(s)).collect::<Result<_, _>>())?;
        let mut rows: Vec<CheckpointRow> = per_seed.into_iter().flatten().collect();
        sort_rows(&mut rows);
        Ok(rows)
    }
}

fn load_text(setup: &TextSetup) -> Result<(Corpus, EmbeddingTable), HarnessError> {
    let read = |p: &Path| {
        fs::read_to_string(p).map_err(|e| HarnessError::Input { path: p.to_owned(), msg: e.to_string() })
    };
    let corpus = match (&setup.corpus, &setup.tasks) {
        (None, None) => Corpus::builtin(),
        (c, t) => {
            let c = c.as_deref().map(read).transpose()?;
            let t = t.as_deref().map(read).transpose()?;
            Corpus::parse(
                c.as_deref().unwrap_or(crate::textworld::BUILTIN_CORPUS),
                t.as_deref().unwrap_or(crate::textworld::BUILTIN_TASKS),
            )?
        }
    };
    let table = match &setup.embeddings {
        Some(path) => load_embeddings(path, &corpus)?,
        None => EmbeddingTable::fallback(&corpus, setup.fallback_dim)?,
    };
    Ok((corpus, table))
}

/// Mean and sample standard deviation over seeds for one
/// (variant, episode, metric) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: Experiment,
    pub variant: String,
    pub episode: u64,
    pub metric: String,
    pub mean: f64,
    pub std: f64,
    pub n_seeds: usize,
}

pub fn summarize(rows: &[CheckpointRow]) -> Vec<SummaryRow> {
    let mut cells: BTreeMap<(Experiment, &str, &str, u64), Vec<f64>> = BTreeMap::new();
    for r in rows {
        cells.entry((r.experiment, &r.variant, &r.metric, r.episode)).or_default().push(r.value);
    }
    cells
        .into_iter()
        .map(|((experiment, variant, metric, episode), values)| {
            let agg = aggregate_over_seeds(&values).expect("every cell holds at least one value");
            SummaryRow {
                experiment,
                variant: variant.to_owned(),
                episode,
                metric: metric.to_owned(),
                mean: agg.mean,
                std: agg.std,
                n_seeds: agg.n_seeds,
            }
        })
        .collect()
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(output_err(path))?;
    let mut w = csv::Writer::from_writer(io::BufWriter::new(file));
    for r in rows {
        w.serialize(r).map_err(|e| HarnessError::Output { path: path.to_owned(), source: e.into() })?;
    }
    w.flush().map_err(output_err(path))
}

pub fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, HarnessError> {
    let file = File::open(path).map_err(|e| match e.kind() {
        io::ErrorKind::NotFound => HarnessError::MissingRaw(path.to_owned()),
        _ => HarnessError::Input { path: path.to_owned(), msg: e.to_string() },
    })?;
    csv::Reader::from_reader(io::BufReader::new(file))
        .deserialize()
        .collect::<Result<Vec<T>, _>>()
        .map_err(|e| HarnessError::Input { path: path.to_owned(), msg: e.to_string() })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub dir: PathBuf,
    pub rows: usize,
    pub summary: Vec<SummaryRow>,
    pub plots: Vec<PathBuf>,
}

/// Execute the manifest and write its artifacts.
pub fn run(manifest: &RunManifest, jobs: usize) -> Result<RunOutput, HarnessError> {
    manifest.validate()?;
    let runner = Runner::new(manifest.config()?)?;
    let dir = manifest.experiment_dir();
    fs::create_dir_all(&dir).map_err(output_err(&dir))?;
    let manifest_path = dir.join(MANIFEST_TXT);
    fs::write(&manifest_path, format!("{}\n", manifest.describe())).map_err(output_err(&manifest_path))?;

    let rows = runner.run_seeds(&manifest.seeds, jobs)?;
    write_csv(&dir.join(RAW_CSV), &rows)?;
    let summary = summarize(&rows);
    write_csv(&dir.join(SUMMARY_CSV), &summary)?;
    let plots = if manifest.emit_plots {
        render_figures(&figures(manifest.experiment, &summary), &dir)?
    } else {
        Vec::new()
    };
    Ok(RunOutput { dir, rows: rows.len(), summary, plots })
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub results: Vec<CriterionResult>,
}

impl VerifyReport {
    pub fn all_pass(&self) -> bool {
        self.results.iter().all(|r| r.pass)
    }

    pub fn write<W: Write>(&self, mut out: W) -> io::Result<()> {
        for r in &self.results {
            writeln!(out, "{r}")?;
        }
        let failed = self.results.iter().filter(|r| !r.pass).count();
        writeln!(out, "{} criteria, {} failed", self.results.len(), failed)
    }
}

/// Read `<output_dir>/<experiment>/raw.csv` and evaluate every criterion
/// that applies to it.
pub fn verify(experiment: Experiment, output_dir: &Path) -> Result<VerifyReport, HarnessError> {
    let path = output_dir.join(experiment.as_str()).join(RAW_CSV);
    let rows: Vec<CheckpointRow> = read_csv(&path)?;
    let rows: Vec<CheckpointRow> = rows.into_iter().filter(|r| r.experiment == experiment).collect();
    Ok(VerifyReport { results: evaluate(experiment, &rows) })
}
