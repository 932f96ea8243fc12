use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ordering::SteinConfig;
use crate::prune::SartreConfig;
use crate::synthgen::DEFAULT_NOISE_RANGE;

/// Smallest `d` treated as high-dimensional; such runs must not estimate
/// the order.
pub const HIGH_DIM_THRESHOLD: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase", deny_unknown_fields)]
pub enum GraphFamily {
    Er { avg_edges: usize },
    Sf { m: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrderingMode {
    /// Score-matching leaf removal on the sampled data.
    Score,
    /// The true DAG's topological order.
    GroundTruth,
    /// A fixed order read from a file (1-based labels).
    File(PathBuf),
}

/// Everything needed to regenerate an experiment. The master seed fixes
/// every trial seed; per-trial seeds for graphs, links, trees and
/// subsampling are derived from it and override the seeds inside
/// `sartre.trees` and `stein`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub graph: GraphFamily,
    pub d: usize,
    pub n: usize,
    pub trials: usize,
    pub seed: u64,
    pub ordering: OrderingMode,
    /// Probability that a non-root node gets a linear link.
    pub p_linear: f64,
    pub noise_std_range: (f64, f64),
    pub sartre: SartreConfig,
    pub stein: SteinConfig,
    /// Trials run concurrently on this many threads.
    pub workers: usize,
    pub output_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            graph: GraphFamily::Er { avg_edges: 10 },
            d: 10,
            n: 1000,
            trials: 10,
            seed: 0,
            ordering: OrderingMode::Score,
            p_linear: 0.0,
            noise_std_range: DEFAULT_NOISE_RANGE,
            sartre: SartreConfig::default(),
            stein: SteinConfig::default(),
            workers: 1,
            output_dir: None,
        }
    }
}

fn config_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("{field}: {msg}"))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)
            .map_err(|e| Error::Config(format!("line {}, column {}: {e}", e.line(), e.column())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.d;
        if d == 0 {
            return Err(config_err("d", "must be at least 1"));
        }
        if self.n < 2 {
            return Err(config_err("n", "must be at least 2"));
        }
        if self.trials == 0 {
            return Err(config_err("trials", "must be at least 1"));
        }
        if self.workers == 0 {
            return Err(config_err("workers", "must be at least 1"));
        }
        match self.graph {
            GraphFamily::Er { avg_edges } => {
                let pairs = d * (d - 1) / 2;
                if avg_edges > pairs {
                    return Err(config_err(
                        "graph.avg_edges",
                        format!("{avg_edges} exceeds the {pairs} pairs available for d = {d}"),
                    ));
                }
            }
            GraphFamily::Sf { m } => {
                if d > 1 && (m == 0 || m >= d) {
                    return Err(config_err("graph.m", format!("need 1 <= m < d, got {m}")));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.p_linear) {
            return Err(config_err("p_linear", "must lie in [0, 1]"));
        }
        let (lo, hi) = self.noise_std_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(config_err("noise_std_range", "need 0 < lo <= hi"));
        }
        if d >= HIGH_DIM_THRESHOLD && self.ordering == OrderingMode::Score {
            return Err(config_err(
                "ordering",
                format!("d >= {HIGH_DIM_THRESHOLD} requires ground-truth or file ordering"),
            ));
        }
        self.sartre
            .validate()
            .map_err(|e| config_err("sartre", e))?;
        self.stein.validate().map_err(|e| config_err("stein", e))?;
        Ok(())
    }
}
