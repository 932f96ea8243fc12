//! Observational samples from additive noise models
//! `X_i = f_i(X_pa(i)) + ε_i` with Gaussian noise.
//!
//! Nonlinear links are exact joint draws from a zero-mean Gaussian process
//! with an RBF kernel, evaluated at the realized parent values. Each node
//! owns a random stream derived from the spec seed and its index, so a node's
//! samples depend only on its ancestors.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::seed::{derive_seed, rng_from_seed};

const STREAM_NOISE_SCALE: u64 = 1;
const STREAM_SAMPLES: u64 = 2;
const STREAM_LINKS: u64 = 3;

/// Diagonal jitter tried in turn when the kernel factorization fails.
pub const JITTER_SCHEDULE: [f64; 3] = [1e-8, 1e-6, 1e-4];

/// Default range for per-node noise standard deviations.
pub const DEFAULT_NOISE_RANGE: (f64, f64) = (0.4, 0.8);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LinkKind {
    GpNonlinear,
    Linear,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnmSpec {
    pub dag: Dag,
    /// Link per node; ignored for roots.
    pub links: Vec<LinkKind>,
    pub noise_std: Vec<f64>,
    pub gp_bandwidth: f64,
    pub seed: u64,
}

impl AnmSpec {
    /// All-nonlinear spec with noise scales drawn from [`DEFAULT_NOISE_RANGE`].
    pub fn nonlinear(dag: Dag, seed: u64) -> Self {
        let (lo, hi) = DEFAULT_NOISE_RANGE;
        Self::with_noise_range(dag, lo, hi, seed)
    }

    pub fn with_noise_range(dag: Dag, lo: f64, hi: f64, seed: u64) -> Self {
        let d = dag.num_vars();
        let noise_std = (0..d)
            .map(|j| {
                let mut rng =
                    rng_from_seed(derive_seed(derive_seed(seed, STREAM_NOISE_SCALE), j as u64));
                if hi > lo {
                    rng.gen_range(lo..hi)
                } else {
                    lo
                }
            })
            .collect();
        AnmSpec {
            dag,
            links: vec![LinkKind::GpNonlinear; d],
            noise_std,
            gp_bandwidth: 1.0,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dag.num_vars();
        if self.links.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.links.len(),
            });
        }
        if self.noise_std.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: self.noise_std.len(),
            });
        }
        if let Some(s) = self
            .noise_std
            .iter()
            .find(|s| !(**s > 0.0 && s.is_finite()))
        {
            return Err(Error::invalid(format!(
                "noise std must be positive, got {s}"
            )));
        }
        if !(self.gp_bandwidth > 0.0 && self.gp_bandwidth.is_finite()) {
            return Err(Error::invalid(format!(
                "gp bandwidth must be positive, got {}",
                self.gp_bandwidth
            )));
        }
        Ok(())
    }
}

/// Assigns each non-root node a linear link with probability `p_linear`,
/// otherwise a GP link. Noise scales follow [`AnmSpec::nonlinear`].
pub fn make_mixed_spec(dag: Dag, p_linear: f64, seed: u64) -> Result<AnmSpec> {
    AnmSpec::nonlinear(dag, seed).with_linear_fraction(p_linear)
}

impl AnmSpec {
    /// Redraws links: each non-root node becomes linear with probability
    /// `p_linear`, GP otherwise.
    pub fn with_linear_fraction(mut self, p_linear: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_linear) {
            return Err(Error::invalid(format!(
                "p_linear must lie in [0, 1], got {p_linear}"
            )));
        }
        let mut rng = rng_from_seed(derive_seed(self.seed, STREAM_LINKS));
        for i in 0..self.dag.num_vars() {
            let draw: f64 = rng.gen();
            self.links[i] = if !self.dag.parents(i).is_empty() && draw < p_linear {
                LinkKind::Linear
            } else {
                LinkKind::GpNonlinear
            };
        }
        Ok(self)
    }
}

/// Draws `n` joint observations from `spec`.
pub fn sample_anm(spec: &AnmSpec, n: usize) -> Result<Dataset> {
    spec.validate()?;
    if n < 2 {
        return Err(Error::invalid(format!("need at least 2 samples, got {n}")));
    }
    let d = spec.dag.num_vars();
    let order = spec
        .dag
        .topological_sort()
        .ok_or_else(|| Error::invalid("graph is cyclic"))?;
    let mut values = DMatrix::<f64>::zeros(n, d);
    let sample_seed = derive_seed(spec.seed, STREAM_SAMPLES);
    for &i in order.as_slice() {
        let mut rng = rng_from_seed(derive_seed(sample_seed, i as u64));
        let sigma = spec.noise_std[i];
        let noise: Vec<f64> = (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                sigma * z
            })
            .collect();
        let parents = spec.dag.parents(i);
        let signal = if parents.is_empty() {
            DVector::zeros(n)
        } else {
            let inputs = DMatrix::from_fn(n, parents.len(), |m, k| values[(m, parents[k])]);
            match spec.links[i] {
                LinkKind::GpNonlinear => gp_prior_draw(&inputs, spec.gp_bandwidth, &mut rng)?,
                LinkKind::Linear => {
                    let weights: Vec<f64> = (0..parents.len())
                        .map(|_| {
                            let magnitude = rng.gen_range(0.5..2.0);
                            if rng.gen::<bool>() {
                                magnitude
                            } else {
                                -magnitude
                            }
                        })
                        .collect();
                    &inputs * DVector::from_vec(weights)
                }
            }
        };
        for m in 0..n {
            values[(m, i)] = signal[m] + noise[m];
        }
    }
    Dataset::new(values)
}

/// RBF Gram matrix `exp(-‖p - p'‖² / (2 h²))` over the rows of `inputs`.
pub fn rbf_gram(inputs: &DMatrix<f64>, bandwidth: f64) -> DMatrix<f64> {
    let n = inputs.nrows();
    let k = inputs.ncols();
    let scale = -0.5 / (bandwidth * bandwidth);
    let mut gram = DMatrix::<f64>::zeros(n, n);
    for b in 0..n {
        gram[(b, b)] = 1.0;
        for a in b + 1..n {
            let mut dist2 = 0.0;
            for c in 0..k {
                let diff = inputs[(a, c)] - inputs[(b, c)];
                dist2 += diff * diff;
            }
            let v = (scale * dist2).exp();
            gram[(a, b)] = v;
            gram[(b, a)] = v;
        }
    }
    gram
}

/// One joint draw of GP function values at the rows of `inputs`.
pub fn gp_prior_draw(
    inputs: &DMatrix<f64>,
    bandwidth: f64,
    rng: &mut impl Rng,
) -> Result<DVector<f64>> {
    let n = inputs.nrows();
    let gram = rbf_gram(inputs, bandwidth);
    let z: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
    for jitter in JITTER_SCHEDULE {
        let mut jittered = gram.clone();
        for m in 0..n {
            jittered[(m, m)] += jitter;
        }
        if let Some(chol) = jittered.cholesky() {
            // l_dirty keeps stale entries above the diagonal; only read below it
            let l = chol.l_dirty();
            let mut f = DVector::zeros(n);
            for c in 0..n {
                let zc = z[c];
                for r in c..n {
                    f[r] += l[(r, c)] * zc;
                }
            }
            return Ok(f);
        }
    }
    Err(Error::NumericalFailure(format!(
        "GP kernel factorization failed for n = {n} after jitter up to {:e}",
        JITTER_SCHEDULE[JITTER_SCHEDULE.len() - 1]
    )))
}
