//! Edge pruning with sparse additive models over randomized tree embeddings.
//!
//! Interval sets are fitted once per variable, without looking at any target,
//! and reused by every regression in which that variable is a candidate
//! parent. For each target a group lasso is solved over the embeddings of
//! all variables preceding it in the order; a candidate whose whole
//! coefficient group is exactly zero loses its edge.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::embed::{fit_randomized_trees, Embedding, Interval, IntervalSet, TreeConfig};
use crate::error::{Error, Result};
use crate::graph::{Dag, TopologicalOrder};
use crate::grouplasso::{
    solve_group_lasso, DesignBlock, GroupedCoefficients, GroupedDesign, SolveReport,
};
use crate::seed::derive_seed;

/// How `lambda` relates to the squared loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossScale {
    /// `Σ residual² + λ Σ‖β_g‖`, passed to the solver as is.
    Sum,
    /// `(1/2n) Σ residual² + λ Σ‖β_g‖`; the solver receives `2nλ`.
    Mean,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SartreConfig {
    pub lambda: f64,
    pub loss_scale: LossScale,
    pub trees: TreeConfig,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SartreConfig {
    fn default() -> Self {
        SartreConfig {
            lambda: 0.1,
            loss_scale: LossScale::Mean,
            trees: TreeConfig::default(),
            tol: 1e-6,
            max_iter: 10_000,
        }
    }
}

impl SartreConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::invalid(format!(
                "lambda must be nonnegative, got {}",
                self.lambda
            )));
        }
        if !(self.tol > 0.0) {
            return Err(Error::invalid(format!(
                "tol must be positive, got {}",
                self.tol
            )));
        }
        self.trees.validate()
    }

    /// The `λ` handed to the solver for `n` samples.
    pub fn solver_lambda(&self, n: usize) -> f64 {
        match self.loss_scale {
            LossScale::Sum => self.lambda,
            LossScale::Mean => 2.0 * n as f64 * self.lambda,
        }
    }
}

/// Fits one interval set per column; variable `j` uses seed
/// `derive_seed(cfg.seed, j)`.
pub fn fit_interval_sets(data: &Dataset, cfg: &TreeConfig) -> Result<Vec<IntervalSet>> {
    (0..data.d())
        .into_par_iter()
        .map(|j| {
            let col: Vec<f64> = data.column(j).iter().copied().collect();
            let var_cfg = TreeConfig {
                seed: derive_seed(cfg.seed, j as u64),
                ..cfg.clone()
            };
            let mut rset = fit_randomized_trees(j, &col, &var_cfg)?;
            rset.config.seed = cfg.seed;
            Ok(rset)
        })
        .collect()
}

/// Group-lasso fit for one target variable.
#[derive(Debug, Clone)]
pub struct TargetFit {
    pub target: usize,
    /// Candidate parents in increasing index order; group `g` belongs to
    /// `candidates[g]`.
    pub candidates: Vec<usize>,
    pub coefficients: GroupedCoefficients,
    pub report: SolveReport,
    pub solver_lambda: f64,
}

#[derive(Debug, Clone)]
pub struct SartreModel {
    pub config: SartreConfig,
    pub order: TopologicalOrder,
    pub interval_sets: Vec<IntervalSet>,
    /// Fits for every target with a nonempty candidate set, by target index.
    pub fits: Vec<TargetFit>,
    pub dag: Dag,
}

/// Prunes the DAG induced by `order` and returns only the graph.
pub fn sartre_prune(data: &Dataset, order: &TopologicalOrder, cfg: &SartreConfig) -> Result<Dag> {
    Ok(fit_sartre(data, order, cfg)?.dag)
}

/// Full pruning run, keeping interval sets and coefficients.
pub fn fit_sartre(
    data: &Dataset,
    order: &TopologicalOrder,
    cfg: &SartreConfig,
) -> Result<SartreModel> {
    cfg.validate()?;
    let rsets = fit_interval_sets(data, &cfg.trees)?;
    fit_sartre_with_intervals(data, order, rsets, cfg)
}

/// Pruning with precomputed interval sets (shared across a `λ` sweep).
pub fn fit_sartre_with_intervals(
    data: &Dataset,
    order: &TopologicalOrder,
    rsets: Vec<IntervalSet>,
    cfg: &SartreConfig,
) -> Result<SartreModel> {
    cfg.validate()?;
    let d = data.d();
    if order.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: order.len(),
        });
    }
    if rsets.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: rsets.len(),
        });
    }
    if data.n() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 samples, got {}",
            data.n()
        )));
    }
    let blocks: Vec<Arc<DesignBlock>> = rsets
        .par_iter()
        .enumerate()
        .map(|(j, rset)| {
            let emb = Embedding::of_column(data.column(j).iter().copied(), rset);
            Arc::new(DesignBlock::binary(j, Arc::new(emb)))
        })
        .collect();
    let lambda = cfg.solver_lambda(data.n());
    let mut targets: Vec<usize> = (0..d)
        .filter(|&i| !order.predecessors(i).is_empty())
        .collect();
    targets.sort_unstable();
    let fits = targets
        .par_iter()
        .map(|&i| {
            let mut candidates = order.predecessors(i).to_vec();
            candidates.sort_unstable();
            let design =
                GroupedDesign::new(candidates.iter().map(|&j| Arc::clone(&blocks[j])).collect())?;
            let y: Vec<f64> = data.column(i).iter().copied().collect();
            let (coefficients, report) =
                solve_group_lasso(&design, &y, lambda, cfg.tol, cfg.max_iter)?;
            Ok(TargetFit {
                target: i,
                candidates,
                coefficients,
                report,
                solver_lambda: lambda,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut dag = Dag::full_from_order(order);
    for fit in &fits {
        for (g, &j) in fit.candidates.iter().enumerate() {
            if !fit.coefficients.is_active(g) {
                dag.remove_edge(j, fit.target);
            }
        }
    }
    Ok(SartreModel {
        config: cfg.clone(),
        order: order.clone(),
        interval_sets: rsets,
        fits,
        dag,
    })
}

/// Step function over the sorted union of interval boundaries.
///
/// `levels[0]` applies on `(−∞, γ_1]`, `levels[p]` on `(γ_p, γ_{p+1}]`, and
/// the last level on `(γ_q, +∞)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseConstant {
    pub boundaries: Vec<f64>,
    pub levels: Vec<f64>,
}

impl PiecewiseConstant {
    pub fn zero() -> Self {
        PiecewiseConstant {
            boundaries: Vec::new(),
            levels: vec![0.0],
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.levels[self.boundaries.partition_point(|&g| g < x)]
    }

    pub fn is_zero(&self) -> bool {
        self.levels.iter().all(|&v| v == 0.0)
    }
}

/// Rewrites `Σ_k β_k 1{x ∈ r_k}` as a single step function.
pub fn flatten_shape(intervals: &[Interval], coeffs: &[f64]) -> Result<PiecewiseConstant> {
    if intervals.len() != coeffs.len() {
        return Err(Error::DimensionMismatch {
            expected: intervals.len(),
            found: coeffs.len(),
        });
    }
    let mut boundaries: Vec<f64> = intervals
        .iter()
        .flat_map(|iv| [iv.lo, iv.hi])
        .filter(|b| b.is_finite())
        .collect();
    boundaries.sort_by(f64::total_cmp);
    boundaries.dedup();
    // every piece (γ_{p-1}, γ_p] contains its right end; the last one contains +∞
    let level_at = |x: f64| -> f64 {
        intervals
            .iter()
            .zip(coeffs)
            .filter(|(iv, _)| iv.contains(x))
            .map(|(_, &b)| b)
            .sum()
    };
    let mut levels: Vec<f64> = boundaries.iter().map(|&g| level_at(g)).collect();
    levels.push(level_at(f64::INFINITY));
    Ok(PiecewiseConstant { boundaries, levels })
}

impl SartreModel {
    pub fn fit_for(&self, target: usize) -> Option<&TargetFit> {
        self.fits.iter().find(|f| f.target == target)
    }

    /// One flattened shape function per candidate parent of `target`.
    pub fn shape_functions(&self, target: usize) -> Vec<(usize, PiecewiseConstant)> {
        let Some(fit) = self.fit_for(target) else {
            return Vec::new();
        };
        fit.candidates
            .iter()
            .enumerate()
            .map(|(g, &j)| {
                let shape = if fit.coefficients.is_active(g) {
                    let intervals: Vec<Interval> =
                        self.interval_sets[j].intervals().copied().collect();
                    flatten_shape(&intervals, fit.coefficients.group(g))
                        .expect("group width matches intervals")
                } else {
                    PiecewiseConstant::zero()
                };
                (j, shape)
            })
            .collect()
    }

    /// Additive-model prediction of `target` from a full observation row.
    pub fn predict(&self, target: usize, row: &[f64]) -> Option<f64> {
        let fit = self.fit_for(target)?;
        let shapes = self.shape_functions(target);
        Some(fit.coefficients.intercept + shapes.iter().map(|(j, s)| s.eval(row[*j])).sum::<f64>())
    }

    pub fn dump(&self) -> ModelDump {
        ModelDump {
            config: self.config.clone(),
            order: self.order.as_slice().iter().map(|v| v + 1).collect(),
            interval_sets: self.interval_sets.clone(),
            targets: self
                .fits
                .iter()
                .map(|f| TargetDump {
                    target: f.target + 1,
                    intercept: f.coefficients.intercept,
                    solver_lambda: f.solver_lambda,
                    iterations: f.report.iterations,
                    objective: f.report.objective,
                    max_kkt_violation: f.report.max_kkt_violation,
                    converged: f.report.converged,
                    groups: f
                        .candidates
                        .iter()
                        .enumerate()
                        .map(|(g, &j)| GroupDump {
                            parent: j + 1,
                            coefficients: f.coefficients.group(g).to_vec(),
                        })
                        .collect(),
                })
                .collect(),
            edges: self
                .dag
                .edges()
                .into_iter()
                .map(|(j, i)| [j + 1, i + 1])
                .collect(),
        }
    }
}

/// JSON model dump; variable labels are 1-based.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelDump {
    pub config: SartreConfig,
    pub order: Vec<usize>,
    pub interval_sets: Vec<IntervalSet>,
    pub targets: Vec<TargetDump>,
    pub edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TargetDump {
    pub target: usize,
    pub intercept: f64,
    pub solver_lambda: f64,
    pub iterations: usize,
    pub objective: f64,
    pub max_kkt_violation: f64,
    pub converged: bool,
    pub groups: Vec<GroupDump>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupDump {
    pub parent: usize,
    pub coefficients: Vec<f64>,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn iv(lo: f64, hi: f64) -> Interval {
        Interval::new(lo, hi).unwrap()
    }

    #[test]
    fn flatten_single_interval() {
        let pc = flatten_shape(&[iv(0.0, 1.0)], &[1.0]).unwrap();
        assert_eq!(pc.boundaries, vec![0.0, 1.0]);
        assert_eq!(pc.levels, vec![0.0, 1.0, 0.0]);
        assert_eq!(pc.eval(0.0), 0.0);
        assert_eq!(pc.eval(0.5), 1.0);
        assert_eq!(pc.eval(1.0), 1.0);
        assert_eq!(pc.eval(1.5), 0.0);
    }

    #[test]
    fn flatten_overlapping_intervals() {
        let pc = flatten_shape(&[iv(0.0, 2.0), iv(1.0, 3.0)], &[1.0, 2.0]).unwrap();
        assert_eq!(pc.boundaries, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(pc.levels, vec![0.0, 1.0, 3.0, 2.0, 0.0]);
    }

    #[test]
    fn flatten_whole_line() {
        let pc =
            flatten_shape(&[Interval::WHOLE_LINE, Interval::WHOLE_LINE], &[0.5, 0.25]).unwrap();
        assert!(pc.boundaries.is_empty());
        assert_eq!(pc.eval(-1e300), 0.75);
    }

    #[test]
    fn flatten_length_mismatch() {
        assert!(flatten_shape(&[iv(0.0, 1.0)], &[]).is_err());
    }

    #[test]
    fn single_variable_gives_empty_graph() {
        let data = Dataset::from_rows(&[vec![1.0], vec![2.0], vec![0.5]]).unwrap();
        let dag = sartre_prune(
            &data,
            &TopologicalOrder::identity(1),
            &SartreConfig::default(),
        )
        .unwrap();
        assert_eq!(dag.num_edges(), 0);
    }

    #[test]
    fn solver_lambda_scaling() {
        let mut cfg = SartreConfig::default();
        assert_eq!(cfg.solver_lambda(1000), 200.0);
        cfg.loss_scale = LossScale::Sum;
        assert_eq!(cfg.solver_lambda(1000), 0.1);
    }

    #[test]
    fn order_length_must_match() {
        let data = Dataset::from_rows(&[vec![1.0, 2.0], vec![2.0, 1.0]]).unwrap();
        let r = sartre_prune(
            &data,
            &TopologicalOrder::identity(3),
            &SartreConfig::default(),
        );
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }
}
