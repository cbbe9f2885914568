//! Memory Worth: a per-memory outcome estimator built from two weighted
//! retrieval counters, plus the simulation worlds and harness used to study
//! its calibration and failure modes.

pub mod estimator;
pub mod harness;
pub mod metrics;
pub mod rng;
pub mod rows;
pub mod synthworlds;
pub mod textworld;

pub use estimator::{
    beta_posterior_mean, classify, compute_weights, mw, mw_conditional, Counts, EstimatorError,
    MemoryId, MemoryRecord, MemoryStore, Outcome, TaxonomyConfig, TaxonomyLabel, WeightKind,
    WeightScheme,
};
pub use metrics::{aggregate_over_seeds, spearman_rho, SeedAggregate};
pub use rows::{CheckpointRow, Experiment};
