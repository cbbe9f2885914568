//! Brute-force reference implementations shared by the oracle tests and the
//! acceptance suite. Each one is written from the definitions directly and
//! shares no code with the library.

#![allow(dead_code)]

use rand::Rng;

use memworth_core::rng::{SplitMix64, StreamKey};
use memworth_core::{compute_weights, MemoryId, MemoryStore, Outcome, WeightKind, WeightScheme};

pub const TOL: f64 = 1e-9;

/// One logged retrieval: memory indices, their weights, success flag and
/// optional context label.
#[derive(Debug, Clone)]
pub struct Event {
    pub ids: Vec<usize>,
    pub weights: Vec<f64>,
    pub success: bool,
    pub context: Option<&'static str>,
}

/// MW of memory `m` from the definition: summed success weight over summed
/// weight, 0.5 with no evidence. `context` restricts the sum.
pub fn mw_from_log(events: &[Event], m: usize, context: Option<&str>) -> f64 {
    let mut pos = 0.0;
    let mut neg = 0.0;
    for e in events {
        if context.is_some() && e.context != context {
            continue;
        }
        for (i, w) in e.ids.iter().zip(&e.weights) {
            if *i == m {
                if e.success {
                    pos += w;
                } else {
                    neg += w;
                }
            }
        }
    }
    if pos + neg == 0.0 {
        0.5
    } else {
        pos / (pos + neg)
    }
}

pub fn replay(n: usize, events: &[Event]) -> MemoryStore {
    let mut store = MemoryStore::new(n);
    for e in events {
        let ids: Vec<MemoryId> = e.ids.iter().map(|&i| MemoryId(i as u32)).collect();
        let y = if e.success { Outcome::Success } else { Outcome::Failure };
        store.update(&ids, &e.weights, y, e.context).expect("valid event");
    }
    store
}

/// Rank of each value counted pairwise: 1 + #smaller + (#equal - 1) / 2.
pub fn ranks_quadratic(x: &[f64]) -> Vec<f64> {
    x.iter()
        .map(|a| {
            let smaller = x.iter().filter(|b| *b < a).count() as f64;
            let equal = x.iter().filter(|b| *b == a).count() as f64;
            1.0 + smaller + (equal - 1.0) / 2.0
        })
        .collect()
}

/// Spearman's rho as the Pearson correlation of the pairwise ranks; zero
/// when either side has no spread.
pub fn spearman_quadratic(x: &[f64], y: &[f64]) -> f64 {
    let (rx, ry) = (ranks_quadratic(x), ranks_quadratic(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for i in 0..x.len() {
        sxy += (rx[i] - mx) * (ry[i] - my);
        sxx += (rx[i] - mx).powi(2);
        syy += (ry[i] - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

/// `a` outranks `b`: higher score, or equal score and smaller id.
fn outranks(scores: &[f64], ids: &[&str], a: usize, b: usize) -> bool {
    scores[a] > scores[b] || (scores[a] == scores[b] && ids[a] < ids[b])
}

/// Exhaustive top-k: the unique k-subset whose members all outrank every
/// non-member, listed in outranking order.
pub fn top_k_exhaustive(scores: &[f64], ids: &[&str], k: usize) -> Vec<usize> {
    let n = scores.len();
    let k = k.min(n);
    let mut best: Option<Vec<usize>> = None;
    for mask in 0u32..(1 << n) {
        if mask.count_ones() as usize != k {
            continue;
        }
        let inside: Vec<usize> = (0..n).filter(|i| mask & (1 << i) != 0).collect();
        let dominant = inside
            .iter()
            .all(|&a| (0..n).filter(|i| mask & (1 << i) == 0).all(|b| outranks(scores, ids, a, b)));
        if dominant {
            assert!(best.is_none(), "two dominant subsets");
            best = Some(inside);
        }
    }
    let mut chosen = best.expect("a dominant subset exists");
    let beaten_by = |a: usize| chosen.iter().filter(|&&b| outranks(scores, ids, b, a)).count();
    let mut order: Vec<(usize, usize)> = chosen.iter().map(|&a| (beaten_by(a), a)).collect();
    order.sort();
    chosen = order.into_iter().map(|(_, a)| a).collect();
    chosen
}

/// Weights from their closed forms.
pub fn weights_closed_form(kind: WeightKind, scores: &[f64], w_min: f64) -> Option<Vec<f64>> {
    let k = scores.len() as f64;
    let total: f64 = scores.iter().sum();
    match kind {
        WeightKind::None => None,
        WeightKind::Uniform => Some(vec![1.0 / k; scores.len()]),
        _ if total == 0.0 => Some(vec![1.0 / k; scores.len()]),
        WeightKind::Oracle => Some(scores.iter().map(|s| s / total).collect()),
        WeightKind::ScoreProportional => {
            let clipped: Vec<f64> = scores.iter().map(|s| f64::max(s / total, w_min)).collect();
            let z: f64 = clipped.iter().sum();
            Some(clipped.iter().map(|c| c / z).collect())
        }
    }
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn scheme_for(kind: WeightKind, w_min: f64) -> WeightScheme {
    match kind {
        WeightKind::ScoreProportional => WeightScheme::score_proportional(w_min).unwrap(),
        other => WeightScheme { kind: other, w_min },
    }
}

/// Random replay log over `n <= 20` memories using library weight schemes.
pub fn random_log(rng: &mut SplitMix64, n: usize, len: usize) -> Vec<Event> {
    let kinds = [WeightKind::Uniform, WeightKind::ScoreProportional, WeightKind::Oracle];
    let contexts = [None, Some("easy"), Some("hard")];
    (0..len)
        .map(|_| {
            let k = rng.random_range(1..=n);
            let ids = rand::seq::index::sample(rng, n, k).into_vec();
            let scored: Vec<(MemoryId, f64)> =
                ids.iter().map(|&i| (MemoryId(i as u32), rng.random::<f64>())).collect();
            let kind = kinds[rng.random_range(0..kinds.len())];
            let weights = compute_weights(&scheme_for(kind, 0.01), &scored).unwrap().unwrap();
            Event { ids, weights, success: rng.random::<bool>(), context: contexts[rng.random_range(0..3)] }
        })
        .collect()
}

/// Scores drawn from a handful of levels so ties are common.
pub fn tied_values(rng: &mut SplitMix64, n: usize) -> Vec<f64> {
    let levels = rng.random_range(1..=6);
    (0..n).map(|_| rng.random_range(0..levels) as f64 * 0.25).collect()
}

pub fn instance_rng(suite: &str, i: u64) -> SplitMix64 {
    StreamKey::root("oracle", 0).child(suite).rng(i)
}

/// Worst-case deviations of the library from each oracle over `instances`
/// random cases: (replay, spearman, top_k, weights).
pub fn oracle_deviations(instances: u64) -> [f64; 4] {
    use memworth_core::textworld::{top_k_blended, Blend};
    use memworth_core::spearman_rho;

    let mut worst = [0.0f64; 4];
    for i in 0..instances {
        let mut rng = instance_rng("replay", i);
        let n = rng.random_range(1..=20);
        let len = rng.random_range(0..200);
        let log = random_log(&mut rng, n, len);
        let store = replay(n, &log);
        for m in 0..n {
            let id = MemoryId(m as u32);
            worst[0] = worst[0].max((store.mw(id) - mw_from_log(&log, m, None)).abs());
            for c in ["easy", "hard"] {
                let rec = store.get(id).unwrap();
                let got = memworth_core::mw_conditional(rec, c);
                worst[0] = worst[0].max((got - mw_from_log(&log, m, Some(c))).abs());
            }
        }

        let mut rng = instance_rng("spearman", i);
        let n = rng.random_range(2..=20);
        let (x, y) = (tied_values(&mut rng, n), tied_values(&mut rng, n));
        worst[1] = worst[1].max((spearman_rho(&x, &y).unwrap() - spearman_quadratic(&x, &y)).abs());

        let mut rng = instance_rng("topk", i);
        let n = rng.random_range(1..=12);
        let cos = tied_values(&mut rng, n);
        let mw = tied_values(&mut rng, n);
        let names: Vec<String> = (0..n).map(|j| format!("m{:02}", (j * 7 + 3) % 13)).collect();
        let ids: Vec<&str> = names.iter().map(String::as_str).collect();
        let k = rng.random_range(1..=n);
        let blend = Blend { emb: 0.6, mw: 0.4 };
        let scores: Vec<f64> = cos.iter().zip(&mw).map(|(c, m)| blend.emb * c + blend.mw * m).collect();
        let got = top_k_blended(&cos, &mw, &ids, k, blend);
        let want = top_k_exhaustive(&scores, &ids, k);
        let got_idx: Vec<usize> = got.iter().map(|(m, _)| m.index()).collect();
        let mismatch = if got_idx == want { 0.0 } else { 1.0 };
        let score_err = got.iter().map(|(m, s)| (s - scores[m.index()]).abs()).fold(0.0, f64::max);
        worst[2] = worst[2].max(mismatch).max(score_err);

        let mut rng = instance_rng("weights", i);
        let k = rng.random_range(1..=20);
        let raw: Vec<f64> = (0..k).map(|_| if rng.random::<f64>() < 0.2 { 0.0 } else { rng.random::<f64>() }).collect();
        let w_min = [0.01, 0.05, 0.2][rng.random_range(0..3)];
        for kind in [WeightKind::Uniform, WeightKind::ScoreProportional, WeightKind::Oracle, WeightKind::None] {
            let scored: Vec<(MemoryId, f64)> = raw.iter().enumerate().map(|(j, s)| (MemoryId(j as u32), *s)).collect();
            let got = compute_weights(&scheme_for(kind, w_min), &scored).unwrap();
            let want = weights_closed_form(kind, &raw, w_min);
            worst[3] = worst[3].max(match (got, want) {
                (None, None) => 0.0,
                (Some(g), Some(w)) => max_abs_diff(&g, &w).max((g.iter().sum::<f64>() - 1.0).abs()),
                _ => 1.0,
            });
        }
    }
    worst
}
