use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use memworth_core::harness::{self, HarnessError, RunManifest, SummaryRow};
use memworth_core::textworld::{Corpus, EmbeddingTable, BUILTIN_TASKS, FALLBACK_DIM};
use memworth_core::Experiment;

#[derive(Parser)]
#[command(name = "memworth", version, about = "Run and check Memory Worth experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a seed sweep and write raw.csv, summary.csv and optional plots.
    Run {
        /// exp1, exp2, exp3, exp4, exp5 or convergence.
        experiment: Experiment,
        /// Inclusive range `a..b`, or a comma-separated list.
        #[arg(long, default_value = "0..19")]
        seeds: String,
        /// Config override such as `exp3.temperature=3.0`; repeatable.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
        /// Output root; artifacts go to `<out>/<experiment>/`.
        #[arg(long, env = "MEMWORTH_OUT", default_value = "runs")]
        out: PathBuf,
        /// Also render one SVG chart per figure.
        #[arg(long)]
        plots: bool,
        /// Maximum number of seeds run concurrently.
        #[arg(long, default_value_t = default_jobs())]
        jobs: usize,
    },
    /// Check a finished run against its acceptance criteria.
    Verify {
        experiment: Experiment,
        #[arg(long, env = "MEMWORTH_OUT", default_value = "runs")]
        out: PathBuf,
    },
    /// Write the hashed bag-of-words embeddings for a corpus.
    EmbedFallback {
        #[arg(long)]
        corpus: PathBuf,
        /// Task templates; the built-in set when omitted.
        #[arg(long)]
        tasks: Option<PathBuf>,
        #[arg(long, default_value_t = FALLBACK_DIM)]
        dim: usize,
        #[arg(long)]
        out: PathBuf,
    },
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let code = err.downcast_ref::<HarnessError>().map_or(1, HarnessError::exit_code);
            ExitCode::from(code as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<ExitCode> {
    match command {
        Command::Run { experiment, seeds, overrides, out, plots, jobs } => {
            let mut manifest = RunManifest::new(experiment, out);
            manifest.seeds = harness::parse_seeds(&seeds)?;
            manifest.emit_plots = plots;
            let mut map = BTreeMap::new();
            for o in &overrides {
                let (k, v) = harness::parse_override(o)?;
                map.insert(k, v);
            }
            manifest.overrides = map;
            let output = harness::run(&manifest, jobs)?;
            print_final(&output.summary);
            println!("wrote {} rows to {}", output.rows, output.dir.display());
            for p in &output.plots {
                println!("plot {}", p.display());
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { experiment, out } => {
            let report = harness::verify(experiment, &out)?;
            report.write(io::stdout().lock())?;
            Ok(if report.all_pass() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
        }
        Command::EmbedFallback { corpus, tasks, dim, out } => {
            let corpus_text =
                fs::read_to_string(&corpus).with_context(|| format!("reading {}", corpus.display()))?;
            let tasks_text = match &tasks {
                Some(p) => fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
                None => BUILTIN_TASKS.to_owned(),
            };
            let corpus = Corpus::parse(&corpus_text, &tasks_text)?;
            let table = EmbeddingTable::fallback(&corpus, dim)?;
            table.save(&out)?;
            println!("wrote {} vectors ({} dim={}) to {}", table.vectors.len(), table.model, table.dim, out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Mean ± std of every series at its last checkpoint.
fn print_final(summary: &[SummaryRow]) {
    let mut last: BTreeMap<(&str, &str), &SummaryRow> = BTreeMap::new();
    for r in summary {
        let slot = last.entry((&r.variant, &r.metric)).or_insert(r);
        if r.episode > slot.episode {
            *slot = r;
        }
    }
    for ((variant, metric), r) in last {
        println!("{variant:>18} {metric:<16} @{:<6} {:>8.4} ± {:.4} (n={})", r.episode, r.mean, r.std, r.n_seeds);
    }
}
