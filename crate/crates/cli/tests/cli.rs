use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use memworth_core::harness::{read_csv, write_csv, SummaryRow};
use memworth_core::textworld::{load_embeddings, Corpus};
use memworth_core::CheckpointRow;

fn memworth(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_memworth"))
        .args(args)
        .env("MEMWORTH_OUT", out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn single_seed_summary_has_zero_std() {
    let dir = tempfile::tempdir().unwrap();
    let o = memworth(&["run", "exp1", "--seeds", "4..4"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: Vec<SummaryRow> = read_csv(&dir.path().join("exp1/summary.csv")).unwrap();
    assert!(!summary.is_empty());
    assert!(summary.iter().all(|r| r.std == 0.0 && r.n_seeds == 1));
    let head = fs::read_to_string(dir.path().join("exp1/summary.csv")).unwrap();
    assert_eq!(head.lines().next().unwrap(), "experiment,variant,episode,metric,mean,std,n_seeds");
}

#[test]
fn identical_manifests_give_identical_raw_csv() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = ["run", "exp2", "--seeds", "0..3", "--set", "exp2.n_episodes=2000"];
    let oa = memworth(&[&args[..], &["--jobs", "1"]].concat(), a.path());
    let ob = memworth(&[&args[..], &["--jobs", "4"]].concat(), b.path());
    assert!(oa.status.success() && ob.status.success());
    let x = fs::read(a.path().join("exp2/raw.csv")).unwrap();
    let y = fs::read(b.path().join("exp2/raw.csv")).unwrap();
    assert!(!x.is_empty());
    assert!(x == y);
    let manifest = fs::read_to_string(a.path().join("exp2/manifest.txt")).unwrap();
    assert_eq!(manifest.trim(), "run exp2 --seeds 0..3 --set exp2.n_episodes=2000");
}

#[test]
fn bad_override_exits_2_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let o = memworth(&["run", "exp3", "--seeds", "0", "--set", "exp3.tempreature=3.0"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("exp3.tempreature"), "{}", stderr(&o));
    let o = memworth(&["run", "exp3", "--seeds", "0", "--set", "exp3.temperature=hot"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("exp3/raw.csv").exists());
}

#[test]
fn unwritable_output_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("plain-file");
    fs::write(&blocker, "not a directory").unwrap();
    let o = memworth(&["run", "exp4", "--seeds", "0", "--out", blocker.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn verify_without_raw_csv_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let o = memworth(&["verify", "exp1"], dir.path());
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn verify_passes_a_real_run_and_fails_a_tampered_one() {
    let dir = tempfile::tempdir().unwrap();
    assert!(memworth(&["run", "convergence", "--seeds", "0..1"], dir.path()).status.success());
    let ok = memworth(&["verify", "convergence"], dir.path());
    assert!(ok.status.success(), "{}", stdout(&ok));
    assert!(stdout(&ok).lines().any(|l| l.starts_with("PASS convergence p=0.50")));

    assert!(memworth(&["run", "exp1", "--seeds", "0..1"], dir.path()).status.success());
    let path = dir.path().join("exp1/raw.csv");
    let mut rows: Vec<CheckpointRow> = read_csv(&path).unwrap();
    for r in rows.iter_mut().filter(|r| r.variant == "uniform" && r.metric == "rho" && r.episode == 10_000) {
        r.value = 0.2;
    }
    write_csv(&path, &rows).unwrap();
    let bad = memworth(&["verify", "exp1"], dir.path());
    assert!(!bad.status.success());
    let text = stdout(&bad);
    assert!(text.contains("FAIL exp1 uniform rho@10000 = 0.200 in [0.84, 0.94]"), "{text}");
}

#[test]
fn plots_are_written_on_request() {
    let dir = tempfile::tempdir().unwrap();
    let o = memworth(&["run", "exp5", "--seeds", "0..1", "--set", "exp5.n_episodes=200", "--plots"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let svg = fs::read_to_string(dir.path().join("exp5/exp5_mw.svg")).unwrap();
    assert!(svg.contains("exp5_mw (16 points, 2 seeds)"));
}

#[test]
fn embed_fallback_writes_a_loadable_file() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_path = dir.path().join("corpus.tsv");
    fs::write(&corpus_path, memworth_core::textworld::BUILTIN_CORPUS).unwrap();
    let out = dir.path().join("emb.txt");
    let o = memworth(
        &["embed-fallback", "--corpus", corpus_path.to_str().unwrap(), "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let table = load_embeddings(&out, &Corpus::builtin()).unwrap();
    assert_eq!(table.dim, 256);
    assert!(table.is_unit_norm());

    let o = memworth(
        &["run", "exp5", "--seeds", "0", "--set", "exp5.n_episodes=100", "--set", &format!("exp5.embeddings={}", out.display())],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
}
