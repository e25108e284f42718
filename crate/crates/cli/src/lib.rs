//! Experiment harness and file I/O behind the `qubo-tree` binary.

pub mod config;
pub mod experiment;
pub mod io;
pub mod report;

pub use config::{DatasetSource, ExperimentConfig, Mode, ScheduleConfig};
pub use experiment::{run_experiment, ExperimentSummary, MeanStd, RepeatRecord, TrialRecord};
pub use report::{export_report, read_summaries, ReportFiles};
