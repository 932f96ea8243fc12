//! Topological ordering by iterative leaf identification.
//!
//! A variable is a leaf exactly when the diagonal entry `∂s_i/∂x_i` of the
//! score Jacobian has zero variance. Scores and their diagonal Jacobian are
//! estimated with first- and second-order Stein estimators under a Gaussian
//! kernel; the variable with the smallest estimated variance is removed and
//! the procedure repeats on the rest.

use nalgebra::{Cholesky, DMatrix, Dyn};
use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::TopologicalOrder;
use crate::seed::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "value")]
pub enum BandwidthRule {
    /// Median of pairwise Euclidean distances among the rows in use.
    MedianHeuristic,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteinConfig {
    pub bandwidth: BandwidthRule,
    /// Ridge `η` added to the kernel diagonal.
    pub ridge: f64,
    /// Recompute statistics on the remaining variables after every removal.
    /// When false, the first round's statistics rank all variables.
    pub recompute_each_round: bool,
    /// Rows beyond this are subsampled (without replacement) before any
    /// kernel computation.
    pub max_samples: usize,
    pub subsample_seed: u64,
}

impl Default for SteinConfig {
    fn default() -> Self {
        SteinConfig {
            bandwidth: BandwidthRule::MedianHeuristic,
            ridge: 1e-3,
            recompute_each_round: true,
            max_samples: 3000,
            subsample_seed: 0,
        }
    }
}

impl SteinConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.ridge > 0.0 && self.ridge.is_finite()) {
            return Err(Error::invalid(format!(
                "ridge must be positive, got {}",
                self.ridge
            )));
        }
        if let BandwidthRule::Fixed(h) = self.bandwidth {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::invalid(format!(
                    "bandwidth must be positive, got {h}"
                )));
            }
        }
        if self.max_samples < 2 {
            return Err(Error::invalid("max_samples must be at least 2"));
        }
        Ok(())
    }
}

/// Kernel quantities shared by the first- and second-order estimators.
struct SteinKernel {
    /// Cholesky factor of `K + ηI`.
    factor: Cholesky<f64, Dyn>,
    /// `Σ_m' ∂k(x_m, x_m')/∂x_{m,i}`.
    grad: DMatrix<f64>,
    /// `Σ_m' ∂²k(x_m, x_m')/∂x_{m,i}²`.
    hess_diag: DMatrix<f64>,
}

fn median_pairwise_distance(x: &DMatrix<f64>) -> f64 {
    let n = x.nrows();
    let mut dists = Vec::with_capacity(n * (n - 1) / 2);
    for a in 0..n {
        for b in a + 1..n {
            let mut s = 0.0;
            for c in 0..x.ncols() {
                let diff = x[(a, c)] - x[(b, c)];
                s += diff * diff;
            }
            dists.push(s.sqrt());
        }
    }
    let mid = dists.len() / 2;
    let (_, median, _) = dists.select_nth_unstable_by(mid, f64::total_cmp);
    *median
}

impl SteinKernel {
    fn new(x: &DMatrix<f64>, cfg: &SteinConfig) -> Result<Self> {
        let (n, k) = x.shape();
        if n < 2 {
            return Err(Error::invalid(format!("need at least 2 samples, got {n}")));
        }
        let mut h = match cfg.bandwidth {
            BandwidthRule::MedianHeuristic => median_pairwise_distance(x),
            BandwidthRule::Fixed(h) => h,
        };
        if !(h > 0.0) {
            // more than half the pairs coincide; fall back to unit bandwidth
            h = 1.0;
        }
        let inv_h2 = 1.0 / (h * h);
        let mut gram = DMatrix::<f64>::zeros(n, n);
        let mut grad = DMatrix::<f64>::zeros(n, k);
        let mut hess_diag = DMatrix::<f64>::zeros(n, k);
        let mut diff = vec![0.0; k];
        for b in 0..n {
            for a in b..n {
                let mut dist2 = 0.0;
                for c in 0..k {
                    diff[c] = x[(a, c)] - x[(b, c)];
                    dist2 += diff[c] * diff[c];
                }
                let kv = (-0.5 * dist2 * inv_h2).exp();
                gram[(a, b)] = kv;
                gram[(b, a)] = kv;
                for c in 0..k {
                    // ∂k/∂x_a = -(x_a - x_b)/h² k, symmetric in the squared term
                    let g = -diff[c] * inv_h2 * kv;
                    let s = (diff[c] * diff[c] * inv_h2 - 1.0) * inv_h2 * kv;
                    grad[(a, c)] += g;
                    hess_diag[(a, c)] += s;
                    if a != b {
                        grad[(b, c)] -= g;
                        hess_diag[(b, c)] += s;
                    }
                }
            }
        }
        for m in 0..n {
            gram[(m, m)] += cfg.ridge;
        }
        let factor = gram.cholesky().ok_or_else(|| {
            Error::NumericalFailure("regularized kernel matrix is not positive definite".into())
        })?;
        Ok(SteinKernel {
            factor,
            grad,
            hess_diag,
        })
    }

    fn score(&self) -> DMatrix<f64> {
        self.factor.solve(&self.grad)
    }

    fn jacobian_diag(&self, score: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = self.factor.solve(&self.hess_diag);
        out.zip_apply(score, |h, s| *h -= s * s);
        out
    }
}

fn rows_in_use(data: &Dataset, cfg: &SteinConfig) -> DMatrix<f64> {
    if data.n() <= cfg.max_samples {
        return data.values().clone();
    }
    let mut rng = rng_from_seed(cfg.subsample_seed);
    let mut rows = index::sample(&mut rng, data.n(), cfg.max_samples).into_vec();
    rows.sort_unstable();
    data.select_rows(&rows).values().clone()
}

/// Estimated score `∇ log p` at every sample (`n × d`).
///
/// First-order Stein estimator `ŝ = (K + ηI)⁻¹ ∇K` with
/// `(∇K)_{m,i} = Σ_m' ∂k(x_m, x_m')/∂x_{m,i}`.
pub fn stein_score(data: &Dataset, cfg: &SteinConfig) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    Ok(SteinKernel::new(&rows_in_use(data, cfg), cfg)?.score())
}

/// Estimated diagonal of the score Jacobian, `∂s_i/∂x_i` at every sample.
///
/// Second-order Stein estimator `Ĥ = -ŝ ⊙ ŝ + (K + ηI)⁻¹ ∇²K`.
pub fn score_jacobian_diag(data: &Dataset, cfg: &SteinConfig) -> Result<DMatrix<f64>> {
    cfg.validate()?;
    jacobian_diag_of(&rows_in_use(data, cfg), cfg)
}

fn jacobian_diag_of(x: &DMatrix<f64>, cfg: &SteinConfig) -> Result<DMatrix<f64>> {
    let kernel = SteinKernel::new(x, cfg)?;
    let score = kernel.score();
    Ok(kernel.jacobian_diag(&score))
}

fn column_variances(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows() as f64;
    m.column_iter()
        .map(|c| {
            let mean = c.mean();
            c.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n
        })
        .collect()
}

/// Variance over samples of the estimated `∂s_i/∂x_i`, per variable.
/// The leaf candidate is the argmin.
pub fn leaf_statistics(data: &Dataset, cfg: &SteinConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let x = rows_in_use(data, cfg);
    Ok(column_variances(&jacobian_diag_of(&x, cfg)?))
}

fn argmin(values: &[f64]) -> usize {
    // first minimum wins, so ties go to the smallest index
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if v.total_cmp(&values[best]).is_lt() {
            best = i;
        }
    }
    best
}

/// Topological order by repeated leaf removal, roots first.
pub fn estimate_order(data: &Dataset, cfg: &SteinConfig) -> Result<TopologicalOrder> {
    cfg.validate()?;
    let d = data.d();
    if data.n() < 2 {
        return Err(Error::invalid(format!(
            "need at least 2 samples, got {}",
            data.n()
        )));
    }
    let x = rows_in_use(data, cfg);
    let mut remaining: Vec<usize> = (0..d).collect();
    let mut reversed = Vec::with_capacity(d);
    if !cfg.recompute_each_round && d > 1 {
        let stats = column_variances(&jacobian_diag_of(&x, cfg)?);
        let mut ranked: Vec<usize> = (0..d).collect();
        ranked.sort_by(|&a, &b| stats[a].total_cmp(&stats[b]).then(a.cmp(&b)));
        reversed = ranked;
        remaining.clear();
    }
    while remaining.len() > 1 {
        let sub = DMatrix::from_fn(x.nrows(), remaining.len(), |m, k| x[(m, remaining[k])]);
        let stats = column_variances(&jacobian_diag_of(&sub, cfg)?);
        let leaf = remaining.remove(argmin(&stats));
        reversed.push(leaf);
    }
    reversed.extend(remaining);
    reversed.reverse();
    TopologicalOrder::new(reversed)
}
