//! Experiment configuration, orchestration and result files.
//!
//! A run directory holds `trials.jsonl` (one record per trial), `aggregate.json`,
//! `summary.csv` (tidy plot rows), `timings.jsonl` and `dags/`. Only
//! `timings.jsonl` depends on anything besides the config.

mod config;
mod experiment;
mod results;

use std::path::Path;

pub use config::{ExperimentConfig, GraphFamily, OrderingMode, HIGH_DIM_THRESHOLD};
pub use experiment::{
    generate_to_dir, generate_trial, load_fixed_order, run_lambda_sweep, run_trial, run_trials,
    SweepOutput, SweepRow, TrialInstance, TrialOutcome, TrialRecord, TrialSeeds, TrialTiming,
    SWEEP_METRICS,
};
pub use results::{
    aggregate, config_echo, dag_paths, load_run, summarize, summary_csv, write_run, write_sweep,
    Aggregate, LoadedRun, MetricSummary, AGGREGATE_FILE, AGGREGATE_METRICS, DAG_DIR, SUMMARY_FILE,
    SWEEP_FILE, SWEEP_SUMMARY_FILE, TIMINGS_FILE, TRIALS_FILE,
};

use crate::data::Dataset;
use crate::error::Result;

/// Environment variable naming the default output directory.
pub const OUTPUT_DIR_ENV: &str = "SARTRE_OUTPUT_DIR";

/// Runs all trials and writes the run directory.
pub fn run_to_dir(cfg: &ExperimentConfig, dir: &Path) -> Result<Aggregate> {
    let outcomes = run_trials(cfg)?;
    write_run(dir, cfg, &outcomes)
}

/// Reads a CSV dataset, optionally resampling `n` rows with replacement.
pub fn ingest_csv(path: impl AsRef<Path>, bootstrap: Option<(usize, u64)>) -> Result<Dataset> {
    let data = Dataset::read_csv(path)?;
    match bootstrap {
        Some((n, seed)) => data.bootstrap(n, seed),
        None => Ok(data),
    }
}
