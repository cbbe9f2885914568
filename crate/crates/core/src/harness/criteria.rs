use std::collections::BTreeMap;
use std::fmt;

use crate::rows::{CheckpointRow, Experiment};
use crate::synthworlds::UNIFORM_REFERENCE;
use crate::textworld::FALLBACK_MODEL;

use Source::{Calibration, Structural};

/// Where a criterion's expected band comes from: a reported
/// calibration result, or a structural property of the estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Calibration,
    Structural,
}

impl fmt::Display for Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Source::Calibration => "calibration",
            Source::Structural => "structural",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Band {
    Closed(f64, f64),
    Open(f64, f64),
    Below(f64),
    AtMost(f64),
    Above(f64),
    AtLeast(f64),
    Exactly(f64),
}

impl Band {
    pub fn contains(self, v: f64) -> bool {
        match self {
            Band::Closed(lo, hi) => v >= lo && v <= hi,
            Band::Open(lo, hi) => v > lo && v < hi,
            Band::Below(x) => v < x,
            Band::AtMost(x) => v <= x,
            Band::Above(x) => v > x,
            Band::AtLeast(x) => v >= x,
            Band::Exactly(x) => v == x,
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Band::Closed(lo, hi) => write!(f, "in [{lo:.2}, {hi:.2}]"),
            Band::Open(lo, hi) => write!(f, "in ({lo:.2}, {hi:.2})"),
            Band::Below(x) => write!(f, "< {x:.2}"),
            Band::AtMost(x) => write!(f, "<= {x:.2}"),
            Band::Above(x) => write!(f, "> {x:.2}"),
            Band::AtLeast(x) => write!(f, ">= {x}"),
            Band::Exactly(x) => write!(f, "= {x}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub name: String,
    /// `None` when the rows needed to measure it are absent.
    pub measured: Option<f64>,
    pub band: Band,
    pub source: Source,
    pub pass: bool,
}

impl CriterionResult {
    fn new(name: impl Into<String>, measured: Option<f64>, band: Band, source: Source) -> Self {
        let pass = measured.is_some_and(|v| band.contains(v));
        CriterionResult { name: name.into(), measured, band, source, pass }
    }
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let status = if self.pass { "PASS" } else { "FAIL" };
        let measured = match self.measured {
            Some(v) if v.fract() == 0.0 && v.abs() < 1e6 => format!("{v}"),
            Some(v) => format!("{v:.3}"),
            None => "missing".to_owned(),
        };
        write!(f, "{status} {} = {measured} {} ({})", self.name, self.band, self.source)
    }
}

/// Index over (variant, metric, episode) → per-seed values.
struct Table {
    cells: BTreeMap<(String, String, u64), BTreeMap<u64, f64>>,
}

impl Table {
    fn new(rows: &[CheckpointRow]) -> Self {
        let mut cells: BTreeMap<_, BTreeMap<u64, f64>> = BTreeMap::new();
        for r in rows {
            cells
                .entry((r.variant.clone(), r.metric.clone(), r.episode))
                .or_default()
                .insert(r.seed, r.value);
        }
        Table { cells }
    }

    fn seeds(&self, variant: &str, metric: &str, episode: u64) -> Option<&BTreeMap<u64, f64>> {
        self.cells.get(&(variant.to_owned(), metric.to_owned(), episode))
    }

    fn mean(&self, variant: &str, metric: &str, episode: u64) -> Option<f64> {
        let s = self.seeds(variant, metric, episode)?;
        Some(s.values().sum::<f64>() / s.len() as f64)
    }

    fn variants(&self) -> Vec<&str> {
        let mut v: Vec<&str> = self.cells.keys().map(|k| k.0.as_str()).collect();
        v.dedup();
        v
    }

    fn last_episode(&self, variant: &str, metric: &str) -> Option<u64> {
        self.cells.keys().filter(|k| k.0 == variant && k.1 == metric).map(|k| k.2).max()
    }

    /// Every value of one series, across episodes and seeds.
    fn all(&self, variant: &str, metric: &str) -> Vec<f64> {
        self.cells
            .iter()
            .filter(|(k, _)| k.0 == variant && k.1 == metric)
            .flat_map(|(_, s)| s.values().copied())
            .collect()
    }

    /// Largest |mean(a) − mean(b)| over the episodes both series report.
    fn max_mean_gap(&self, a: &str, b: &str, metric: &str) -> Option<f64> {
        let gaps: Vec<f64> = self
            .cells
            .keys()
            .filter(|k| k.0 == a && k.1 == metric)
            .filter_map(|k| Some((self.mean(a, metric, k.2)? - self.mean(b, metric, k.2)?).abs()))
            .collect();
        if gaps.is_empty() {
            None
        } else {
            Some(gaps.into_iter().fold(0.0, f64::max))
        }
    }
}

/// Smallest count of `n` seeds that meets a required fraction.
fn required(fraction: f64, n: usize) -> f64 {
    (fraction * n as f64 - 1e-9).ceil()
}

/// Every criterion that applies to `experiment`, measured from its rows.
pub fn evaluate(experiment: Experiment, rows: &[CheckpointRow]) -> Vec<CriterionResult> {
    let t = Table::new(rows);
    match experiment {
        Experiment::Exp1 => exp1(&t),
        Experiment::Exp2 => exp2(&t),
        Experiment::Exp3 => exp3(&t),
        Experiment::Exp4 => exp4(&t),
        Experiment::Exp5 => exp5(&t),
        Experiment::Convergence => convergence(&t),
    }
}

fn exp1(t: &Table) -> Vec<CriterionResult> {
    let mut out = Vec::new();
    for (ep, band) in [
        (2_000, Band::Closed(0.56, 0.76)),
        (5_000, Band::Closed(0.73, 0.89)),
        (10_000, Band::Closed(0.84, 0.94)),
    ] {
        out.push(CriterionResult::new(
            format!("exp1 uniform rho@{ep}"),
            t.mean("uniform", "rho", ep),
            band,
            Calibration,
        ));
    }
    let no_update = t.all("no_update", "rho");
    out.push(CriterionResult::new(
        "exp1 no_update max |rho| over checkpoints",
        (!no_update.is_empty()).then(|| no_update.iter().map(|r| r.abs()).fold(0.0, f64::max)),
        Band::Exactly(0.0),
        Structural,
    ));
    let uniform = t.mean("uniform", "rho", 10_000);
    for v in ["sim_weighted", "oracle"] {
        out.push(CriterionResult::new(
            format!("exp1 |{v} - uniform| rho@10000"),
            t.mean(v, "rho", 10_000).zip(uniform).map(|(a, b)| (a - b).abs()),
            Band::AtMost(0.03),
            Calibration,
        ));
    }
    let beta_gap = t.seeds("beta_bernoulli", "rho", 10_000).zip(t.seeds("uniform", "rho", 10_000)).and_then(
        |(beta, raw)| {
            let gaps: Vec<f64> =
                raw.iter().filter_map(|(s, r)| beta.get(s).map(|b| (b - r).abs())).collect();
            (gaps.len() == raw.len()).then(|| gaps.into_iter().fold(0.0, f64::max))
        },
    );
    out.push(CriterionResult::new(
        "exp1 beta_bernoulli vs uniform max per-seed |rho gap|@10000",
        beta_gap,
        Band::AtMost(0.01),
        Calibration,
    ));
    let mut violations = Vec::new();
    for v in t.variants() {
        violations.extend(t.all(v, "gate_violations"));
    }
    out.push(CriterionResult::new(
        "exp1 gate violations (evidence < 10 but labelled)",
        (!violations.is_empty()).then(|| violations.iter().sum()),
        Band::Exactly(0.0),
        Structural,
    ));
    let final_low = |v: &str| t.last_episode(v, "low_value").and_then(|ep| t.mean(v, "low_value", ep));
    for v in ["uniform", "sim_weighted"] {
        out.push(CriterionResult::new(
            format!("exp1 {v} seed-mean low_value count"),
            final_low(v),
            Band::Closed(0.0, 10.0),
            Calibration,
        ));
    }
    out.push(CriterionResult::new(
        "exp1 sim_weighted - uniform seed-mean low_value count",
        final_low("sim_weighted").zip(final_low("uniform")).map(|(a, b)| a - b),
        Band::AtLeast(0.0),
        Calibration,
    ));
    out
}

fn exp2(t: &Table) -> Vec<CriterionResult> {
    vec![
        CriterionResult::new("exp2 global rho@10000", t.mean("global", "rho", 10_000), Band::AtMost(-0.20), Calibration),
        CriterionResult::new(
            "exp2 hard_conditional rho@10000",
            t.mean("hard_conditional", "rho", 10_000),
            Band::Open(0.02, 0.35),
            Calibration,
        ),
        CriterionResult::new(
            "exp2 max |global - weighted_mix| rho over checkpoints",
            t.max_mean_gap("global", "weighted_mix", "rho"),
            Band::AtMost(0.02),
            Calibration,
        ),
    ]
}

fn exp3(t: &Table) -> Vec<CriterionResult> {
    let uniform = t.mean(UNIFORM_REFERENCE, "rho", 10_000);
    let mut out = Vec::new();
    for v in t.variants().into_iter().filter(|v| v.starts_with("eps=")) {
        let m = t.mean(v, "rho", 10_000);
        out.push(CriterionResult::new(format!("exp3 {v} rho@10000"), m, Band::AtLeast(0.85), Calibration));
        out.push(CriterionResult::new(
            format!("exp3 uniform - {v} rho@10000"),
            m.zip(uniform).map(|(a, u)| u - a),
            Band::AtMost(0.02),
            Calibration,
        ));
    }
    if out.is_empty() {
        out.push(CriterionResult::new("exp3 epsilon variants", None, Band::AtLeast(0.85), Calibration));
    }
    out
}

fn exp4(t: &Table) -> Vec<CriterionResult> {
    let at_end = |v: &str, m: &str| t.last_episode(v, m).and_then(|ep| t.mean(v, m, ep));
    let sep = |v: &str| at_end(v, "mw_anchor").zip(at_end(v, "mw_hitchhiker")).map(|(a, h)| (a - h).abs());
    let per_seed_sep = |v: &str| -> Option<BTreeMap<u64, f64>> {
        let ep = t.last_episode(v, "mw_anchor")?;
        let a = t.seeds(v, "mw_anchor", ep)?;
        let h = t.seeds(v, "mw_hitchhiker", ep)?;
        Some(a.iter().filter_map(|(s, x)| h.get(s).map(|y| (*s, (x - y).abs()))).collect())
    };
    let mut out = vec![
        CriterionResult::new("exp4 frac=0.00 |anchor - hitchhiker|", sep("frac=0.00"), Band::Below(0.02), Calibration),
        CriterionResult::new("exp4 frac=0.00 anchor", at_end("frac=0.00", "mw_anchor"), Band::Closed(0.44, 0.54), Calibration),
        CriterionResult::new(
            "exp4 frac=0.00 hitchhiker",
            at_end("frac=0.00", "mw_hitchhiker"),
            Band::Closed(0.44, 0.54),
            Calibration,
        ),
        CriterionResult::new("exp4 frac=0.10 |anchor - hitchhiker|", sep("frac=0.10"), Band::Below(0.03), Calibration),
    ];
    let (lo, hi) = (per_seed_sep("frac=0.10"), per_seed_sep("frac=0.30"));
    let (wins, need) = match (&lo, &hi) {
        (Some(lo), Some(hi)) => {
            let wins = hi.iter().filter(|(s, h)| lo.get(s).is_some_and(|l| *h > l)).count();
            (Some(wins as f64), required(0.9, hi.len()))
        }
        _ => (None, 18.0),
    };
    out.push(CriterionResult::new(
        "exp4 seeds with separation(frac=0.30) > separation(frac=0.10)",
        wins,
        Band::AtLeast(need),
        Calibration,
    ));
    out.push(CriterionResult::new(
        "exp4 frac=1.00 anchor",
        at_end("frac=1.00", "mw_anchor"),
        Band::Closed(0.50, 0.60),
        Calibration,
    ));
    out
}

fn exp5(t: &Table) -> Vec<CriterionResult> {
    let mut out = Vec::new();
    for v in t.variants() {
        let m = |metric: &str, ep: u64| t.mean(v, metric, ep);
        if v.starts_with(FALLBACK_MODEL) {
            out.push(CriterionResult::new(format!("exp5[{v}] stale@100"), m("mw_stale", 100), Band::AtLeast(0.8), Calibration));
            let decline = match (m("mw_stale", 100), m("mw_stale", 500), m("mw_stale", 3_000)) {
                (Some(a), Some(b), Some(c)) => Some((b - a).max(c - b)),
                _ => None,
            };
            out.push(CriterionResult::new(
                format!("exp5[{v}] largest stale step over 100/500/3000"),
                decline,
                Band::Below(0.0),
                Calibration,
            ));
            out.push(CriterionResult::new(format!("exp5[{v}] stale@3000"), m("mw_stale", 3_000), Band::Below(0.40), Calibration));
            for d in ["specialist", "control"] {
                out.push(CriterionResult::new(
                    format!("exp5[{v}] {d}@3000"),
                    m(&format!("mw_{d}"), 3_000),
                    Band::Above(0.55),
                    Calibration,
                ));
            }
        } else {
            for (d, band) in [
                ("stale", Band::Closed(0.07, 0.27)),
                ("specialist", Band::Closed(0.67, 0.87)),
                ("control", Band::Closed(0.63, 0.83)),
            ] {
                out.push(CriterionResult::new(
                    format!("exp5[{v}] {d}@3000"),
                    m(&format!("mw_{d}"), 3_000),
                    band,
                    Calibration,
                ));
            }
            out.push(CriterionResult::new(
                format!("exp5[{v}] |hitchhiker - specialist|@3000"),
                m("mw_hitchhiker", 3_000).zip(m("mw_specialist", 3_000)).map(|(h, s)| (h - s).abs()),
                Band::Below(0.05),
                Calibration,
            ));
            let crossing = t
                .cells
                .keys()
                .filter(|k| k.0 == v && k.1 == "mw_stale")
                .map(|k| k.2)
                .find(|&ep| m("mw_stale", ep).is_some_and(|x| x < 0.40));
            out.push(CriterionResult::new(
                format!("exp5[{v}] first episode with stale < 0.40"),
                crossing.map(|e| e as f64),
                Band::Closed(150.0, 600.0),
                Calibration,
            ));
        }
    }
    if out.is_empty() {
        out.push(CriterionResult::new("exp5 stale@100", None, Band::AtLeast(0.8), Calibration));
    }
    out
}

fn convergence(t: &Table) -> Vec<CriterionResult> {
    let mut out = Vec::new();
    for v in t.variants() {
        let end = t.seeds(v, "max_abs_err", 50_000);
        let (close, need) = match end {
            Some(s) => (Some(s.values().filter(|e| **e < 0.02).count() as f64), required(0.95, s.len())),
            None => (None, 19.0),
        };
        out.push(CriterionResult::new(
            format!("convergence {v} seeds with max|MW - p| < 0.02 @50000"),
            close,
            Band::AtLeast(need),
            Structural,
        ));
        let (early, late) = (t.seeds(v, "mean_abs_err", 12_500), t.seeds(v, "mean_abs_err", 50_000));
        let (shrunk, need) = match (early, late) {
            (Some(a), Some(b)) => {
                let n = b.iter().filter(|(s, e)| a.get(s).is_some_and(|x| *e < x)).count();
                (Some(n as f64), required(0.9, b.len()))
            }
            _ => (None, 18.0),
        };
        out.push(CriterionResult::new(
            format!("convergence {v} seeds with error@50000 < error@12500"),
            shrunk,
            Band::AtLeast(need),
            Structural,
        ));
    }
    if out.is_empty() {
        out.push(CriterionResult::new("convergence rows", None, Band::AtLeast(19.0), Structural));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(variant: &str, metric: &str, episode: u64, values: &[f64]) -> Vec<CheckpointRow> {
        values
            .iter()
            .enumerate()
            .map(|(s, v)| CheckpointRow::new(Experiment::Exp1, variant, s as u64, episode, metric, *v))
            .collect()
    }

    #[test]
    fn bands() {
        assert!(Band::Closed(0.84, 0.94).contains(0.84));
        assert!(!Band::Open(0.02, 0.35).contains(0.02));
        assert!(Band::Exactly(0.0).contains(0.0));
        assert!(!Band::Below(0.0).contains(0.0));
        assert_eq!(required(0.95, 20), 19.0);
        assert_eq!(required(0.9, 20), 18.0);
        assert_eq!(required(0.9, 1), 1.0);
    }

    #[test]
    fn missing_rows_fail() {
        let r = evaluate(Experiment::Exp2, &[]);
        assert!(r.iter().all(|c| !c.pass && c.measured.is_none()));
        assert!(r[0].to_string().starts_with("FAIL exp2 global rho@10000 = missing"));
    }

    #[test]
    fn line_format() {
        let r = evaluate(Experiment::Exp1, &rows("uniform", "rho", 10_000, &[0.88, 0.90]));
        let line = r.iter().find(|c| c.name == "exp1 uniform rho@10000").unwrap().to_string();
        assert_eq!(line, "PASS exp1 uniform rho@10000 = 0.890 in [0.84, 0.94] (calibration)");
    }

    #[test]
    fn tampered_rho_fails() {
        let r = evaluate(Experiment::Exp1, &rows("uniform", "rho", 10_000, &[0.2, 0.2]));
        assert!(!r.iter().find(|c| c.name == "exp1 uniform rho@10000").unwrap().pass);
    }
}
