use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, GraphFamily, OrderingMode};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::io::{read_order, write_dag, write_order};
use crate::graph::{
    evaluate, gen_erdos_renyi, gen_scale_free, shd, Dag, GraphMetrics, TopologicalOrder,
};
use crate::ordering::estimate_order;
use crate::prune::{fit_interval_sets, fit_sartre_with_intervals};
use crate::seed::derive_seed;
use crate::synthgen::{sample_anm, AnmSpec};

const STREAM_GRAPH: u64 = 0;
const STREAM_ANM: u64 = 1;
const STREAM_TREES: u64 = 2;
const STREAM_STEIN: u64 = 3;

/// Seeds used by one trial. `trial` is `derive_seed(master, index)`; the
/// others are derived from it, so adding trials never perturbs earlier ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialSeeds {
    pub trial: u64,
    pub graph: u64,
    pub anm: u64,
    pub trees: u64,
    pub stein: u64,
}

impl TrialSeeds {
    pub fn derive(master: u64, index: usize) -> Self {
        let trial = derive_seed(master, index as u64);
        TrialSeeds {
            trial,
            graph: derive_seed(trial, STREAM_GRAPH),
            anm: derive_seed(trial, STREAM_ANM),
            trees: derive_seed(trial, STREAM_TREES),
            stein: derive_seed(trial, STREAM_STEIN),
        }
    }
}

/// Ground truth and data for one trial.
#[derive(Debug, Clone)]
pub struct TrialInstance {
    pub index: usize,
    pub seeds: TrialSeeds,
    pub truth: Dag,
    pub spec: AnmSpec,
    pub data: Dataset,
}

impl TrialInstance {
    pub fn truth_order(&self) -> TopologicalOrder {
        self.truth
            .topological_sort()
            .expect("generated graphs are acyclic")
    }
}

pub fn generate_trial(cfg: &ExperimentConfig, index: usize) -> Result<TrialInstance> {
    let seeds = TrialSeeds::derive(cfg.seed, index);
    let truth = match cfg.graph {
        GraphFamily::Er { avg_edges } => gen_erdos_renyi(cfg.d, avg_edges, seeds.graph)?,
        GraphFamily::Sf { m } => gen_scale_free(cfg.d, m, seeds.graph)?,
    };
    let (lo, hi) = cfg.noise_std_range;
    let spec = AnmSpec::with_noise_range(truth.clone(), lo, hi, seeds.anm)
        .with_linear_fraction(cfg.p_linear)?;
    let data = sample_anm(&spec, cfg.n)?;
    Ok(TrialInstance {
        index,
        seeds,
        truth,
        spec,
        data,
    })
}

/// Writes `data.csv`, `truth.dag` and `truth.order` for trial `index`.
pub fn generate_to_dir(cfg: &ExperimentConfig, index: usize, dir: &Path) -> Result<TrialInstance> {
    cfg.validate()?;
    let inst = generate_trial(cfg, index)?;
    std::fs::create_dir_all(dir)?;
    inst.data.write_csv(dir.join("data.csv"))?;
    write_dag(dir.join("truth.dag"), &inst.truth)?;
    write_order(dir.join("truth.order"), &inst.truth_order())?;
    Ok(inst)
}

/// Per-trial line of `trials.jsonl`. Contains nothing time-dependent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub dataset_hash: Option<String>,
    /// 1-based.
    pub order: Option<Vec<usize>>,
    pub metrics: Option<GraphMetrics>,
    /// SHD of the full DAG induced by the order, before pruning.
    pub full_dag_shd: Option<usize>,
    pub error: Option<String>,
}

impl TrialRecord {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTiming {
    pub trial: usize,
    pub ordering_secs: f64,
    pub pruning_secs: f64,
    pub total_secs: f64,
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub record: TrialRecord,
    pub timing: TrialTiming,
    /// `(truth, estimate)` when the trial succeeded.
    pub graphs: Option<(Dag, Dag)>,
}

fn obtain_order(
    cfg: &ExperimentConfig,
    inst: &TrialInstance,
    fixed: Option<&TopologicalOrder>,
) -> Result<TopologicalOrder> {
    match &cfg.ordering {
        OrderingMode::GroundTruth => Ok(inst.truth_order()),
        OrderingMode::File(_) => Ok(fixed.expect("file order loaded before trials").clone()),
        OrderingMode::Score => {
            let mut stein = cfg.stein.clone();
            stein.subsample_seed = inst.seeds.stein;
            estimate_order(&inst.data, &stein)
        }
    }
}

fn trial_body(
    cfg: &ExperimentConfig,
    index: usize,
    fixed: Option<&TopologicalOrder>,
    timing: &mut TrialTiming,
) -> Result<(TrialRecord, Dag, Dag)> {
    let inst = generate_trial(cfg, index)?;
    let t0 = Instant::now();
    let order = obtain_order(cfg, &inst, fixed)?;
    timing.ordering_secs = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let mut sartre = cfg.sartre.clone();
    sartre.trees.seed = inst.seeds.trees;
    let rsets = fit_interval_sets(&inst.data, &sartre.trees)?;
    let model = fit_sartre_with_intervals(&inst.data, &order, rsets, &sartre)?;
    timing.pruning_secs = t1.elapsed().as_secs_f64();

    let metrics = evaluate(&inst.truth, &model.dag)?;
    let full = Dag::full_from_order(&order);
    let record = TrialRecord {
        trial: index,
        seed: inst.seeds.trial,
        dataset_hash: Some(format!("{:016x}", inst.data.content_hash())),
        order: Some(order.as_slice().iter().map(|&v| v + 1).collect()),
        metrics: Some(metrics),
        full_dag_shd: Some(shd(&inst.truth, &full)?),
        error: None,
    };
    Ok((record, inst.truth, model.dag))
}

/// Runs one trial; failures are captured in the record instead of returned.
pub fn run_trial(
    cfg: &ExperimentConfig,
    index: usize,
    fixed: Option<&TopologicalOrder>,
) -> TrialOutcome {
    let start = Instant::now();
    let mut timing = TrialTiming {
        trial: index,
        ordering_secs: 0.0,
        pruning_secs: 0.0,
        total_secs: 0.0,
    };
    let result = trial_body(cfg, index, fixed, &mut timing);
    timing.total_secs = start.elapsed().as_secs_f64();
    match result {
        Ok((record, truth, est)) => TrialOutcome {
            record,
            timing,
            graphs: Some((truth, est)),
        },
        Err(e) => TrialOutcome {
            record: TrialRecord {
                trial: index,
                seed: TrialSeeds::derive(cfg.seed, index).trial,
                dataset_hash: None,
                order: None,
                metrics: None,
                full_dag_shd: None,
                error: Some(e.to_string()),
            },
            timing,
            graphs: None,
        },
    }
}

/// Reads the order file named by the config, if any, and checks its length.
pub fn load_fixed_order(cfg: &ExperimentConfig) -> Result<Option<TopologicalOrder>> {
    match &cfg.ordering {
        OrderingMode::File(path) => {
            let order = read_order(path)?;
            if order.len() != cfg.d {
                return Err(Error::DimensionMismatch {
                    expected: cfg.d,
                    found: order.len(),
                });
            }
            Ok(Some(order))
        }
        _ => Ok(None),
    }
}

/// Builds a pool with `workers` threads and runs `f` on each index in
/// parallel, returning results in index order.
pub(crate) fn par_indexed<T: Send>(
    workers: usize,
    count: usize,
    f: impl Fn(usize) -> T + Sync + Send,
) -> Result<Vec<T>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Config(format!("workers: {e}")))?;
    Ok(pool.install(|| (0..count).into_par_iter().map(f).collect()))
}

/// Runs every trial of `cfg` on `cfg.workers` threads.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialOutcome>> {
    cfg.validate()?;
    let fixed = load_fixed_order(cfg)?;
    par_indexed(cfg.workers, cfg.trials, |t| {
        run_trial(cfg, t, fixed.as_ref())
    })
}

/// One row of a λ sweep in long format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub lambda: f64,
    pub trial: usize,
    pub dataset_hash: String,
    pub metric: String,
    pub value: f64,
}

#[derive(Debug, Clone, Default)]
pub struct SweepOutput {
    pub rows: Vec<SweepRow>,
    /// `(trial, message)` for trials that failed before any λ was fitted.
    pub failures: Vec<(usize, String)>,
}

/// Metrics reported per trial and `λ`, in output order.
pub const SWEEP_METRICS: [&str; 6] = ["shd", "sid", "precision", "recall", "f1", "num_edges_est"];

pub(crate) fn metric_value(m: &GraphMetrics, name: &str) -> f64 {
    match name {
        "shd" => m.shd as f64,
        "sid" => m.sid as f64,
        "precision" => m.precision,
        "recall" => m.recall,
        "f1" => m.f1,
        "num_edges_est" => m.num_edges_est as f64,
        "num_edges_true" => m.num_edges_true as f64,
        other => panic!("unknown metric {other}"),
    }
}

fn sweep_trial(
    cfg: &ExperimentConfig,
    index: usize,
    lambdas: &[f64],
    fixed: Option<&TopologicalOrder>,
) -> Result<Vec<SweepRow>> {
    let inst = generate_trial(cfg, index)?;
    let order = obtain_order(cfg, &inst, fixed)?;
    let mut trees = cfg.sartre.trees.clone();
    trees.seed = inst.seeds.trees;
    let rsets = fit_interval_sets(&inst.data, &trees)?;
    let hash = format!("{:016x}", inst.data.content_hash());
    let mut rows = Vec::with_capacity(lambdas.len() * SWEEP_METRICS.len());
    for &lambda in lambdas {
        let mut sartre = cfg.sartre.clone();
        sartre.trees = trees.clone();
        sartre.lambda = lambda;
        let model = fit_sartre_with_intervals(&inst.data, &order, rsets.clone(), &sartre)?;
        let metrics = evaluate(&inst.truth, &model.dag)?;
        rows.extend(SWEEP_METRICS.iter().map(|&metric| SweepRow {
            lambda,
            trial: index,
            dataset_hash: hash.clone(),
            metric: metric.to_string(),
            value: metric_value(&metrics, metric),
        }));
    }
    Ok(rows)
}

/// Fits every `λ` on the same per-trial datasets, orders and interval sets.
pub fn run_lambda_sweep(cfg: &ExperimentConfig, lambdas: &[f64]) -> Result<SweepOutput> {
    cfg.validate()?;
    if lambdas.is_empty() {
        return Err(Error::Config("lambdas: need at least one value".into()));
    }
    if let Some(l) = lambdas.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
        return Err(Error::Config(format!(
            "lambdas: {l} is not a nonnegative number"
        )));
    }
    let fixed = load_fixed_order(cfg)?;
    let per_trial = par_indexed(cfg.workers, cfg.trials, |t| {
        sweep_trial(cfg, t, lambdas, fixed.as_ref())
    })?;
    let mut out = SweepOutput::default();
    for (t, res) in per_trial.into_iter().enumerate() {
        match res {
            Ok(rows) => out.rows.extend(rows),
            Err(e) => out.failures.push((t, e.to_string())),
        }
    }
    Ok(out)
}
