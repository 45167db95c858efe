//! Experiment configuration, training and evaluation runs, scheme
//! comparisons, sweeps and report files.

mod config;
mod metrics;
pub mod report;
mod run;

pub use config::{CheckpointConfig, EvalConfig, ExperimentConfig, SweepAxis};
pub use metrics::{read_jsonl, JsonLines, MetricsRecord, TimingRecord};
pub use run::{
    baseline_table, evaluate, load_policy, run_eval, run_sweep, run_train, BaselineRow, Scheme,
    SweepRow, TrainArtifacts, CHECKPOINT_DIR, CONFIG_FILE, FINAL_CHECKPOINT, METRICS_FILE,
    TIMING_FILE,
};
