//! Memory Worth bookkeeping.
//!
//! Each memory carries two weighted retrieval counters: the weight it
//! received on successful episodes and the weight it received on failed
//! ones. Memory Worth is their ratio, 0.5 before any evidence arrives.
//! Optional per-context counter pairs support conditioning on a known task
//! label.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;

use thiserror::Error;

/// Tolerance on the `sum(weights) == 1` contract.
pub const WEIGHT_SUM_TOL: f64 = 1e-9;

/// Default lower clip for score-proportional weights.
pub const DEFAULT_W_MIN: f64 = 0.01;

#[derive(Debug, Error, PartialEq)]
pub enum EstimatorError {
    #[error("retrieved ids ({ids}) and weights ({weights}) differ in length")]
    LengthMismatch { ids: usize, weights: usize },
    #[error("weights sum to {sum}, expected 1")]
    NotNormalized { sum: f64 },
    #[error("weight {weight} at position {position} is negative or not finite")]
    BadWeight { position: usize, weight: f64 },
    #[error("memory {0} is not in the store")]
    UnknownMemory(MemoryId),
    #[error("retrieval set is empty")]
    EmptyRetrieval,
    #[error("score {score} at position {position} is negative or not finite")]
    BadScore { position: usize, score: f64 },
    #[error("w_min must lie in (0, 1], got {0}")]
    BadClip(f64),
    #[error("taxonomy thresholds must satisfy 0 < theta_low < theta_high < 1 and v_min >= 0")]
    BadTaxonomy,
}

/// Dense memory identifier; stores index records by it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MemoryId(pub u32);

impl MemoryId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for MemoryId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "m{}", self.0)
    }
}

/// Binary episode outcome.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Success,
    Failure,
}

impl Outcome {
    pub fn from_sign(y: i8) -> Self {
        if y > 0 {
            Outcome::Success
        } else {
            Outcome::Failure
        }
    }

    pub fn sign(self) -> i8 {
        match self {
            Outcome::Success => 1,
            Outcome::Failure => -1,
        }
    }

    pub fn is_success(self) -> bool {
        self == Outcome::Success
    }
}

/// A weighted success/failure counter pair.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Counts {
    pub pos: f64,
    pub neg: f64,
}

impl Counts {
    pub fn new(pos: f64, neg: f64) -> Self {
        Counts { pos, neg }
    }

    /// Total weighted evidence `V`.
    pub fn evidence(&self) -> f64 {
        self.pos + self.neg
    }

    /// Success ratio; exactly 0.5 with no evidence.
    pub fn ratio(&self) -> f64 {
        let v = self.evidence();
        if v > 0.0 {
            self.pos / v
        } else {
            0.5
        }
    }

    fn add(&mut self, weight: f64, outcome: Outcome) {
        match outcome {
            Outcome::Success => self.pos += weight,
            Outcome::Failure => self.neg += weight,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MemoryRecord {
    pub id: MemoryId,
    pub counts: Counts,
    pub context_counters: BTreeMap<String, Counts>,
    /// Simulation-only ground truth.
    pub true_utility: Option<f64>,
}

impl MemoryRecord {
    pub fn new(id: MemoryId) -> Self {
        MemoryRecord {
            id,
            counts: Counts::default(),
            context_counters: BTreeMap::new(),
            true_utility: None,
        }
    }

    pub fn with_counts(id: MemoryId, pos: f64, neg: f64) -> Self {
        MemoryRecord {
            counts: Counts::new(pos, neg),
            ..MemoryRecord::new(id)
        }
    }

    pub fn hits_pos(&self) -> f64 {
        self.counts.pos
    }

    pub fn hits_neg(&self) -> f64 {
        self.counts.neg
    }

    pub fn evidence(&self) -> f64 {
        self.counts.evidence()
    }

    pub fn context(&self, label: &str) -> Counts {
        self.context_counters.get(label).copied().unwrap_or_default()
    }
}

/// Memory Worth `hits+ / (hits+ + hits-)`, 0.5 at zero evidence.
pub fn mw(record: &MemoryRecord) -> f64 {
    record.counts.ratio()
}

/// Memory Worth restricted to one context's counters. Unknown contexts have
/// zero evidence and return 0.5.
pub fn mw_conditional(record: &MemoryRecord, context: &str) -> f64 {
    record.context(context).ratio()
}

/// Beta-Bernoulli posterior mean `(alpha + hits+) / (alpha + beta + V)`.
pub fn beta_posterior_mean(record: &MemoryRecord, alpha: f64, beta: f64) -> f64 {
    (alpha + record.counts.pos) / (alpha + beta + record.counts.evidence())
}

/// A collection of memory records indexed by dense [`MemoryId`].
///
/// Single writer: updates take `&mut self`, read accessors take `&self`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MemoryStore {
    records: Vec<MemoryRecord>,
}

impl MemoryStore {
    /// Fresh store with ids `0..n`.
    pub fn new(n: usize) -> Self {
        MemoryStore {
            records: (0..n).map(|i| MemoryRecord::new(MemoryId(i as u32))).collect(),
        }
    }

    pub fn with_utilities(utilities: &[f64]) -> Self {
        let mut store = MemoryStore::new(utilities.len());
        for (r, &u) in store.records.iter_mut().zip(utilities) {
            r.true_utility = Some(u);
        }
        store
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: MemoryId) -> Option<&MemoryRecord> {
        self.records.get(id.index())
    }

    pub fn records(&self) -> &[MemoryRecord] {
        &self.records
    }

    pub fn mw(&self, id: MemoryId) -> f64 {
        mw(&self.records[id.index()])
    }

    /// MW of every record, in id order.
    pub fn mw_vector(&self) -> Vec<f64> {
        self.records.iter().map(mw).collect()
    }

    pub fn total_evidence(&self) -> f64 {
        self.records.iter().map(MemoryRecord::evidence).sum()
    }

    /// Credit one episode's outcome to the retrieved memories.
    ///
    /// Weights must be nonnegative and sum to one; malformed input is
    /// rejected, never renormalized. The store is untouched on error.
    pub fn update(
        &mut self,
        retrieved: &[MemoryId],
        weights: &[f64],
        outcome: Outcome,
        context: Option<&str>,
    ) -> Result<(), EstimatorError> {
        if retrieved.len() != weights.len() {
            return Err(EstimatorError::LengthMismatch {
                ids: retrieved.len(),
                weights: weights.len(),
            });
        }
        if retrieved.is_empty() {
            return Err(EstimatorError::EmptyRetrieval);
        }
        for (position, &weight) in weights.iter().enumerate() {
            if !(weight.is_finite() && weight >= 0.0) {
                return Err(EstimatorError::BadWeight { position, weight });
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(EstimatorError::NotNormalized { sum });
        }
        if let Some(&bad) = retrieved.iter().find(|id| id.index() >= self.records.len()) {
            return Err(EstimatorError::UnknownMemory(bad));
        }

        for (&id, &w) in retrieved.iter().zip(weights) {
            let rec = &mut self.records[id.index()];
            rec.counts.add(w, outcome);
            if let Some(label) = context {
                match rec.context_counters.get_mut(label) {
                    Some(c) => c.add(w, outcome),
                    None => {
                        let mut c = Counts::default();
                        c.add(w, outcome);
                        rec.context_counters.insert(label.to_owned(), c);
                    }
                }
            }
        }
        Ok(())
    }

    /// Write one CSV row per memory in id order:
    /// `id,hits_pos,hits_neg,mw,label` then `<ctx>_pos,<ctx>_neg` for each
    /// declared context.
    pub fn write_snapshot<W: Write>(
        &self,
        out: W,
        taxonomy: &TaxonomyConfig,
        contexts: &[&str],
    ) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec![
            "id".to_owned(),
            "hits_pos".to_owned(),
            "hits_neg".to_owned(),
            "mw".to_owned(),
            "label".to_owned(),
        ];
        for c in contexts {
            header.push(format!("{c}_pos"));
            header.push(format!("{c}_neg"));
        }
        w.write_record(&header)?;
        for r in &self.records {
            let mut row = vec![
                r.id.0.to_string(),
                r.counts.pos.to_string(),
                r.counts.neg.to_string(),
                mw(r).to_string(),
                classify(r, taxonomy).as_str().to_owned(),
            ];
            for c in contexts {
                let cc = r.context(c);
                row.push(cc.pos.to_string());
                row.push(cc.neg.to_string());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WeightKind {
    Uniform,
    ScoreProportional,
    Oracle,
    /// The no-update baseline.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WeightScheme {
    pub kind: WeightKind,
    pub w_min: f64,
}

impl WeightScheme {
    pub fn new(kind: WeightKind) -> Self {
        WeightScheme { kind, w_min: DEFAULT_W_MIN }
    }

    pub fn uniform() -> Self {
        Self::new(WeightKind::Uniform)
    }

    pub fn score_proportional(w_min: f64) -> Result<Self, EstimatorError> {
        if !(w_min > 0.0 && w_min <= 1.0) {
            return Err(EstimatorError::BadClip(w_min));
        }
        Ok(WeightScheme { kind: WeightKind::ScoreProportional, w_min })
    }

    pub fn oracle() -> Self {
        Self::new(WeightKind::Oracle)
    }

    pub fn none() -> Self {
        Self::new(WeightKind::None)
    }

    pub fn updates(&self) -> bool {
        self.kind != WeightKind::None
    }
}

fn uniform_weights(k: usize) -> Vec<f64> {
    vec![1.0 / k as f64; k]
}

/// Per-memory credit shares for one retrieval set, given `(id, score)`
/// pairs. Scores are ignored by the uniform scheme; for the oracle they are
/// the true utilities. Returns `None` for the no-update scheme.
///
/// All-zero scores fall back to uniform weights.
pub fn compute_weights(
    scheme: &WeightScheme,
    retrieved: &[(MemoryId, f64)],
) -> Result<Option<Vec<f64>>, EstimatorError> {
    if retrieved.is_empty() {
        return Err(EstimatorError::EmptyRetrieval);
    }
    let k = retrieved.len();
    let proportional = |clip: Option<f64>| -> Result<Vec<f64>, EstimatorError> {
        for (position, &(_, score)) in retrieved.iter().enumerate() {
            if !(score.is_finite() && score >= 0.0) {
                return Err(EstimatorError::BadScore { position, score });
            }
        }
        let total: f64 = retrieved.iter().map(|&(_, s)| s).sum();
        if total <= 0.0 {
            return Ok(uniform_weights(k));
        }
        let mut w: Vec<f64> = retrieved.iter().map(|&(_, s)| s / total).collect();
        if let Some(w_min) = clip {
            for x in &mut w {
                *x = x.max(w_min);
            }
            let z: f64 = w.iter().sum();
            for x in &mut w {
                *x /= z;
            }
        }
        Ok(w)
    };
    match scheme.kind {
        WeightKind::None => Ok(None),
        WeightKind::Uniform => Ok(Some(uniform_weights(k))),
        WeightKind::ScoreProportional => proportional(Some(scheme.w_min)).map(Some),
        WeightKind::Oracle => proportional(None).map(Some),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaxonomyConfig {
    pub theta_high: f64,
    pub theta_low: f64,
    pub v_min: f64,
}

impl TaxonomyConfig {
    pub fn new(theta_high: f64, theta_low: f64, v_min: f64) -> Result<Self, EstimatorError> {
        let ok = theta_low > 0.0
            && theta_high < 1.0
            && theta_low < theta_high
            && v_min >= 0.0
            && v_min.is_finite();
        if ok {
            Ok(TaxonomyConfig { theta_high, theta_low, v_min })
        } else {
            Err(EstimatorError::BadTaxonomy)
        }
    }
}

impl Default for TaxonomyConfig {
    fn default() -> Self {
        TaxonomyConfig { theta_high: 0.60, theta_low: 0.40, v_min: 10.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaxonomyLabel {
    HighValue,
    Uncertain,
    MixedOutcome,
    LowValue,
}

impl TaxonomyLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            TaxonomyLabel::HighValue => "high_value",
            TaxonomyLabel::Uncertain => "uncertain",
            TaxonomyLabel::MixedOutcome => "mixed_outcome",
            TaxonomyLabel::LowValue => "low_value",
        }
    }
}

/// Evidence gate first (`V < v_min` is always uncertain), then the ratio
/// thresholds; boundary ratios are mixed-outcome.
pub fn classify(record: &MemoryRecord, config: &TaxonomyConfig) -> TaxonomyLabel {
    if record.evidence() < config.v_min {
        return TaxonomyLabel::Uncertain;
    }
    let r = mw(record);
    if r > config.theta_high {
        TaxonomyLabel::HighValue
    } else if r < config.theta_low {
        TaxonomyLabel::LowValue
    } else {
        TaxonomyLabel::MixedOutcome
    }
}
