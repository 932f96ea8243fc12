//! Completely randomized single-variable tree ensembles and the binary
//! interval embedding they induce.
//!
//! Each tree partitions the real line into half-open intervals `(lo, hi]`.
//! A value is embedded as the concatenation over trees of one-hot leaf
//! indicators, so every embedding has exactly `num_trees` set bits.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::seed::{derive_seed, rng_from_seed};

/// Redraws allowed before a node is declared unsplittable.
const MAX_SPLIT_DRAWS: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TreeConfig {
    pub num_trees: usize,
    /// Maximum number of leaves per tree.
    pub max_leaves: usize,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig {
            num_trees: 5,
            max_leaves: 8,
            min_samples_leaf: 2,
            seed: 0,
        }
    }
}

impl TreeConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_trees == 0 || self.max_leaves == 0 || self.min_samples_leaf == 0 {
            return Err(Error::invalid(
                "num_trees, max_leaves and min_samples_leaf must be positive",
            ));
        }
        Ok(())
    }
}

/// The half-open interval `(lo, hi]`; `lo` may be −∞ and `hi` may be +∞.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "IntervalRepr", into = "IntervalRepr")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

/// JSON form: infinite bounds are `null`.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntervalRepr {
    lo: Option<f64>,
    hi: Option<f64>,
}

impl From<Interval> for IntervalRepr {
    fn from(iv: Interval) -> Self {
        IntervalRepr {
            lo: iv.lo.is_finite().then_some(iv.lo),
            hi: iv.hi.is_finite().then_some(iv.hi),
        }
    }
}

impl TryFrom<IntervalRepr> for Interval {
    type Error = String;

    fn try_from(r: IntervalRepr) -> std::result::Result<Self, String> {
        Interval::new(
            r.lo.unwrap_or(f64::NEG_INFINITY),
            r.hi.unwrap_or(f64::INFINITY),
        )
        .map_err(|e| e.to_string())
    }
}

impl Interval {
    pub const WHOLE_LINE: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() || lo >= hi || lo == f64::INFINITY || hi == f64::NEG_INFINITY
        {
            return Err(Error::invalid(format!(
                "({lo}, {hi}] is not a valid interval"
            )));
        }
        Ok(Interval { lo, hi })
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo < x && x <= self.hi
    }
}

/// Intervals extracted from one variable's ensemble, grouped by tree. Each
/// group is sorted and partitions `(−∞, +∞]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntervalSet {
    /// 1-based variable label in serialized form.
    #[serde(with = "one_based")]
    pub var: usize,
    pub config: TreeConfig,
    pub trees: Vec<Vec<Interval>>,
}

mod one_based {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &usize, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u64(*v as u64 + 1)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<usize, D::Error> {
        let v = u64::deserialize(d)?;
        v.checked_sub(1)
            .map(|v| v as usize)
            .ok_or_else(|| serde::de::Error::custom("variable labels start at 1"))
    }
}

impl IntervalSet {
    /// Total number of intervals `l_j`.
    pub fn len(&self) -> usize {
        self.trees.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn num_trees(&self) -> usize {
        self.trees.len()
    }

    /// All intervals, tree by tree.
    pub fn intervals(&self) -> impl Iterator<Item = &Interval> {
        self.trees.iter().flatten()
    }

    /// Checks that each tree's intervals tile the real line without gaps or
    /// overlaps.
    pub fn validate(&self) -> Result<()> {
        for (t, tree) in self.trees.iter().enumerate() {
            let ok = !tree.is_empty()
                && tree[0].lo == f64::NEG_INFINITY
                && tree[tree.len() - 1].hi == f64::INFINITY
                && tree.windows(2).all(|w| w[0].hi == w[1].lo)
                && tree.iter().all(|iv| iv.lo < iv.hi);
            if !ok {
                return Err(Error::invalid(format!(
                    "tree {t} of variable {} does not partition the real line",
                    self.var + 1
                )));
            }
        }
        Ok(())
    }

    /// Column indices of the set bits in the embedding of `x`, one per tree.
    pub fn active_columns(&self, x: f64) -> impl Iterator<Item = usize> + '_ {
        let mut offset = 0;
        self.trees.iter().map(move |tree| {
            let k = tree.partition_point(|iv| iv.hi < x).min(tree.len() - 1);
            let col = offset + k;
            offset += tree.len();
            col
        })
    }
}

/// Grows the ensemble for one column. `cfg.seed` seeds this column's trees
/// directly; callers derive per-variable seeds.
pub fn fit_randomized_trees(var: usize, column: &[f64], cfg: &TreeConfig) -> Result<IntervalSet> {
    cfg.validate()?;
    if column.is_empty() {
        return Err(Error::invalid("cannot fit trees on an empty column"));
    }
    if column.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("column contains non-finite values"));
    }
    let mut sorted = column.to_vec();
    sorted.sort_by(f64::total_cmp);
    let trees = (0..cfg.num_trees)
        .map(|t| grow_tree(&sorted, cfg, derive_seed(cfg.seed, t as u64)))
        .collect();
    Ok(IntervalSet {
        var,
        config: cfg.clone(),
        trees,
    })
}

struct Node {
    /// Range into the sorted sample.
    start: usize,
    end: usize,
    bounds: Interval,
    splittable: bool,
}

fn grow_tree(sorted: &[f64], cfg: &TreeConfig, seed: u64) -> Vec<Interval> {
    let mut rng = rng_from_seed(seed);
    let msl = cfg.min_samples_leaf;
    let mut leaves = vec![Node {
        start: 0,
        end: sorted.len(),
        bounds: Interval::WHOLE_LINE,
        splittable: true,
    }];
    while leaves.len() < cfg.max_leaves {
        // largest splittable leaf; earliest wins ties
        let Some(idx) = leaves
            .iter()
            .enumerate()
            .filter(|(_, l)| l.splittable)
            .max_by(|(ia, a), (ib, b)| (a.end - a.start).cmp(&(b.end - b.start)).then(ib.cmp(ia)))
            .map(|(i, _)| i)
        else {
            break;
        };
        let node = &leaves[idx];
        let values = &sorted[node.start..node.end];
        let (min, max) = (values[0], values[values.len() - 1]);
        let mut split = None;
        if values.len() >= 2 * msl && min < max {
            for _ in 0..MAX_SPLIT_DRAWS {
                let c = rng.gen_range(min..max);
                let left = values.partition_point(|&v| v <= c);
                if left >= msl && values.len() - left >= msl {
                    split = Some((c, left));
                    break;
                }
            }
        }
        let Some((c, left)) = split else {
            leaves[idx].splittable = false;
            continue;
        };
        let node = leaves.swap_remove(idx);
        leaves.push(Node {
            start: node.start,
            end: node.start + left,
            bounds: Interval {
                lo: node.bounds.lo,
                hi: c,
            },
            splittable: true,
        });
        leaves.push(Node {
            start: node.start + left,
            end: node.end,
            bounds: Interval {
                lo: c,
                hi: node.bounds.hi,
            },
            splittable: true,
        });
    }
    let mut intervals: Vec<Interval> = leaves.into_iter().map(|l| l.bounds).collect();
    intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    intervals
}

/// The binary embedding of one value.
pub fn embed(x: f64, rset: &IntervalSet) -> Vec<bool> {
    let mut bits = vec![false; rset.len()];
    for col in rset.active_columns(x) {
        bits[col] = true;
    }
    bits
}

/// Embedding of one variable over all rows, stored sparsely: row `m` has its
/// set bits at `active[m * num_trees .. (m + 1) * num_trees]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub n: usize,
    pub width: usize,
    pub num_trees: usize,
    pub active: Vec<u32>,
}

impl Embedding {
    pub fn of_column(column: impl Iterator<Item = f64>, rset: &IntervalSet) -> Self {
        let mut active = Vec::new();
        let mut n = 0;
        for x in column {
            active.extend(rset.active_columns(x).map(|c| c as u32));
            n += 1;
        }
        Embedding {
            n,
            width: rset.len(),
            num_trees: rset.num_trees(),
            active,
        }
    }

    pub fn row_active(&self, m: usize) -> &[u32] {
        &self.active[m * self.num_trees..(m + 1) * self.num_trees]
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.n, self.width);
        for m in 0..self.n {
            for &c in self.row_active(m) {
                out[(m, c as usize)] = 1.0;
            }
        }
        out
    }
}

/// Embeds every column with its own interval set.
pub fn embed_dataset(data: &Dataset, rsets: &[IntervalSet]) -> Result<Vec<Embedding>> {
    if rsets.len() != data.d() {
        return Err(Error::DimensionMismatch {
            expected: data.d(),
            found: rsets.len(),
        });
    }
    Ok(rsets
        .iter()
        .enumerate()
        .map(|(j, rset)| Embedding::of_column(data.column(j).iter().copied(), rset))
        .collect())
}
