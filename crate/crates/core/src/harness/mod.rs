//! Experiment driver: configuration, the end-to-end per-seed pipeline, the
//! replay-count sweep and report files.

mod config;
mod report;
mod run;

pub use config::{DataSource, ExperimentConfig, Precision, SyntheticConfig, DEFAULT_REPLAY_SWEEP};
pub use report::{emit_report, emit_sweep, percent, SummaryFile};
pub use run::{
    evaluate_learner, evaluate_task, prepare_data, run_experiment, run_seed, sweep_replay,
    RunRecord, SeedRun, SweepRow,
};
