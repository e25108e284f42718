//! Regression-tree split search formulated as a QUBO problem.
//!
//! A split is a logical product of *basic conditions* (single-feature
//! predicates such as `x > 3.2` or `x != "A"`). Choosing which conditions to
//! combine is encoded as a quadratic unconstrained binary optimization whose
//! loss term is the square-weighted MSE of the induced two-group partition,
//! plus quadratic penalties that keep the auxiliary variables consistent.
//! The problem is then minimized by multi-trial Metropolis simulated
//! annealing.
//!
//! The crate is organised by pipeline stage:
//!
//! * [`binarize`] turns raw tabular columns into basic conditions and the 0/1
//!   indicator matrix.
//! * [`data`] generates planted synthetic datasets and ingests CSV files.
//! * [`qubo`] builds and evaluates the split-search QUBO.
//! * [`anneal`] is the simulated-annealing sampler.
//! * [`tree`] extracts splits from annealer output and hosts the exhaustive
//!   reference searches.

pub mod anneal;
pub mod binarize;
pub mod data;
pub mod error;
pub mod qubo;
pub mod tree;

pub use anneal::{
    anneal, run_split_trials, run_trials, run_trials_sequential, Sampler, Schedule, TrialResult,
};
pub use binarize::{
    apply_conditions, derive_conditions, derive_conditions_at, BasicCondition, BinaryDataset,
    ColumnKind, ConditionKind, DatasetMetadata, RawColumn, RawDataset,
};
pub use data::{
    binarize_raw, generate_planted_interaction, generate_synthetic, load_real, Schema,
    SyntheticSpec,
};
pub use error::{Error, Result};
pub use qubo::{
    build_split_qubo, encode_inequality, feasibility, ising_to_qubo, FeasibilityReport, LinearExpr,
    PenaltyWeights, QuboBuilder, QuboProblem, SplitQubo, SplitQuboOptions, TargetTransform,
    VariableLayout,
};
pub use tree::{
    brute_force_best, cmse_oracle, extract_split, metrics, remove_redundant, swmse_mse_ratio,
    Split, SplitMetrics, SplitReport, SplittingVector,
};
