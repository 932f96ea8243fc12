use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use super::experiment::{metric_value, SweepOutput, TrialOutcome, TrialRecord, SWEEP_METRICS};
use crate::error::{Error, Result};
use crate::graph::io::write_dag;
use crate::graph::METRIC_CONVENTIONS;

pub const TRIALS_FILE: &str = "trials.jsonl";
pub const AGGREGATE_FILE: &str = "aggregate.json";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const TIMINGS_FILE: &str = "timings.jsonl";
pub const DAG_DIR: &str = "dags";
pub const SWEEP_FILE: &str = "sweep.csv";
pub const SWEEP_SUMMARY_FILE: &str = "sweep_summary.csv";

/// Metrics aggregated over successful trials.
pub const AGGREGATE_METRICS: [&str; 8] = [
    "shd",
    "sid",
    "precision",
    "recall",
    "f1",
    "num_edges_true",
    "num_edges_est",
    "full_dag_shd",
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub mean: f64,
    /// Sample standard deviation; 0 for a single value.
    pub std: f64,
}

/// Mean and sample standard deviation, or `None` for no values.
pub fn summarize(values: &[f64]) -> Option<MetricSummary> {
    if values.is_empty() {
        return None;
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    };
    Some(MetricSummary { mean, std })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Aggregate {
    pub config: ExperimentConfig,
    pub metric_conventions: BTreeMap<String, String>,
    pub trials: usize,
    pub failed: usize,
    /// Absent metrics mean every trial failed.
    pub metrics: BTreeMap<String, MetricSummary>,
}

/// The config as echoed into results: execution-only fields (`workers`,
/// `output_dir`) are reset so results do not depend on them.
pub fn config_echo(cfg: &ExperimentConfig) -> ExperimentConfig {
    ExperimentConfig {
        workers: 1,
        output_dir: None,
        ..cfg.clone()
    }
}

fn record_metric(r: &TrialRecord, name: &str) -> Option<f64> {
    if name == "full_dag_shd" {
        return r.full_dag_shd.map(|v| v as f64);
    }
    r.metrics.as_ref().map(|m| metric_value(m, name))
}

pub fn aggregate(cfg: &ExperimentConfig, records: &[TrialRecord]) -> Aggregate {
    let ok: Vec<&TrialRecord> = records.iter().filter(|r| !r.failed()).collect();
    let metrics = AGGREGATE_METRICS
        .iter()
        .filter_map(|&name| {
            let values: Vec<f64> = ok.iter().filter_map(|r| record_metric(r, name)).collect();
            summarize(&values).map(|s| (name.to_string(), s))
        })
        .collect();
    Aggregate {
        config: config_echo(cfg),
        metric_conventions: METRIC_CONVENTIONS
            .iter()
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect(),
        trials: records.len(),
        failed: records.len() - ok.len(),
        metrics,
    }
}

/// Tidy plot rows: `metric,d,n,lambda,mean,std`.
pub fn summary_csv(agg: &Aggregate) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["metric", "d", "n", "lambda", "mean", "std"])
        .expect("in-memory write");
    let c = &agg.config;
    for (name, s) in &agg.metrics {
        w.write_record([
            name.clone(),
            c.d.to_string(),
            c.n.to_string(),
            c.sartre.lambda.to_string(),
            s.mean.to_string(),
            s.std.to_string(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii csv")
}

pub fn dag_paths(dir: &Path, trial: usize) -> (PathBuf, PathBuf) {
    let base = dir.join(DAG_DIR);
    (
        base.join(format!("trial_{trial:04}_truth.dag")),
        base.join(format!("trial_{trial:04}_est.dag")),
    )
}

fn write_jsonl<T: Serialize>(path: &Path, items: impl Iterator<Item = T>) -> Result<()> {
    let mut f = std::io::BufWriter::new(fs::File::create(path)?);
    for item in items {
        serde_json::to_writer(&mut f, &item)?;
        f.write_all(b"\n")?;
    }
    f.flush()?;
    Ok(())
}

/// Writes a finished run into `dir`. Every file except `timings.jsonl` is a
/// function of the config alone.
pub fn write_run(
    dir: &Path,
    cfg: &ExperimentConfig,
    outcomes: &[TrialOutcome],
) -> Result<Aggregate> {
    fs::create_dir_all(dir.join(DAG_DIR))?;
    let records: Vec<TrialRecord> = outcomes.iter().map(|o| o.record.clone()).collect();
    write_jsonl(&dir.join(TRIALS_FILE), records.iter())?;
    write_jsonl(&dir.join(TIMINGS_FILE), outcomes.iter().map(|o| &o.timing))?;
    for o in outcomes {
        if let Some((truth, est)) = &o.graphs {
            let (tp, ep) = dag_paths(dir, o.record.trial);
            write_dag(tp, truth)?;
            write_dag(ep, est)?;
        }
    }
    let agg = aggregate(cfg, &records);
    fs::write(
        dir.join(AGGREGATE_FILE),
        serde_json::to_string_pretty(&agg)? + "\n",
    )?;
    fs::write(dir.join(SUMMARY_FILE), summary_csv(&agg))?;
    Ok(agg)
}

#[derive(Debug, Clone)]
pub struct LoadedRun {
    pub aggregate: Aggregate,
    pub records: Vec<TrialRecord>,
}

/// Loads a run and checks that `aggregate.json` matches the per-trial
/// records.
pub fn load_run(dir: &Path) -> Result<LoadedRun> {
    let text = fs::read_to_string(dir.join(AGGREGATE_FILE))?;
    let agg: Aggregate = serde_json::from_str(&text)?;
    let f = BufReader::new(fs::File::open(dir.join(TRIALS_FILE))?);
    let mut records = Vec::new();
    for (i, line) in f.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: TrialRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            message: format!("{TRIALS_FILE}: {e}"),
        })?;
        records.push(rec);
    }
    let recomputed = aggregate(&agg.config, &records);
    if recomputed != agg {
        return Err(Error::invalid(format!(
            "{AGGREGATE_FILE} disagrees with {TRIALS_FILE} in {}",
            dir.display()
        )));
    }
    Ok(LoadedRun {
        aggregate: agg,
        records,
    })
}

/// Writes `sweep.csv` (long format: `lambda,trial,dataset_hash,metric,value`)
/// and `sweep_summary.csv` (`metric,d,n,lambda,mean,std`).
pub fn write_sweep(
    dir: &Path,
    cfg: &ExperimentConfig,
    lambdas: &[f64],
    out: &SweepOutput,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = csv::Writer::from_path(dir.join(SWEEP_FILE)).map_err(csv_err)?;
    w.write_record(["lambda", "trial", "dataset_hash", "metric", "value"])
        .map_err(csv_err)?;
    for r in &out.rows {
        w.write_record([
            r.lambda.to_string(),
            r.trial.to_string(),
            r.dataset_hash.clone(),
            r.metric.clone(),
            r.value.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;

    let mut w = csv::Writer::from_path(dir.join(SWEEP_SUMMARY_FILE)).map_err(csv_err)?;
    w.write_record(["metric", "d", "n", "lambda", "mean", "std"])
        .map_err(csv_err)?;
    for &lambda in lambdas {
        for metric in SWEEP_METRICS {
            let values: Vec<f64> = out
                .rows
                .iter()
                .filter(|r| r.lambda == lambda && r.metric == metric)
                .map(|r| r.value)
                .collect();
            if let Some(s) = summarize(&values) {
                w.write_record([
                    metric.to_string(),
                    cfg.d.to_string(),
                    cfg.n.to_string(),
                    lambda.to_string(),
                    s.mean.to_string(),
                    s.std.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::invalid(format!("csv output: {e}"))
}
