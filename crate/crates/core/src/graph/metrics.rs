use serde::{Deserialize, Serialize};

use super::dsep::Adjacency;
use super::Dag;
use crate::error::{Error, Result};

/// Accuracy of an estimated DAG against the truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphMetrics {
    pub shd: usize,
    pub sid: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub num_edges_true: usize,
    pub num_edges_est: usize,
}

/// Conventions used by [`shd`] and [`edge_prf`], echoed into result files.
pub const METRIC_CONVENTIONS: &[(&str, &str)] = &[
    ("shd", "missing, extra and reversed edges each cost 1"),
    ("precision", "1 when the estimated edge set is empty"),
    ("recall", "1 when the true edge set is empty"),
    ("f1", "0 when precision + recall = 0"),
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

fn check_dims(truth: &Dag, est: &Dag) -> Result<()> {
    if truth.num_vars() != est.num_vars() {
        return Err(Error::DimensionMismatch {
            expected: truth.num_vars(),
            found: est.num_vars(),
        });
    }
    Ok(())
}

/// Structural Hamming distance: number of unordered pairs whose edge status
/// differs. A reversed edge counts once.
pub fn shd(truth: &Dag, est: &Dag) -> Result<usize> {
    check_dims(truth, est)?;
    let d = truth.num_vars();
    let mut count = 0;
    for a in 0..d {
        for b in a + 1..d {
            let t = (truth.has_edge(a, b), truth.has_edge(b, a));
            let e = (est.has_edge(a, b), est.has_edge(b, a));
            if t != e {
                count += 1;
            }
        }
    }
    Ok(count)
}

/// Directed-edge precision, recall and F1.
pub fn edge_prf(truth: &Dag, est: &Dag) -> Result<PrecisionRecall> {
    check_dims(truth, est)?;
    let n_true = truth.num_edges();
    let n_est = est.num_edges();
    let tp = est
        .edges()
        .into_iter()
        .filter(|&(j, i)| truth.has_edge(j, i))
        .count();
    let precision = if n_est == 0 {
        1.0
    } else {
        tp as f64 / n_est as f64
    };
    let recall = if n_true == 0 {
        1.0
    } else {
        tp as f64 / n_true as f64
    };
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(PrecisionRecall {
        precision,
        recall,
        f1,
    })
}

/// Structural intervention distance.
///
/// Counts ordered pairs `(i, j)` for which adjusting for the parents of `i` in
/// `est` does not identify the effect of `do(X_i)` on `X_j` in `truth`. When
/// `j` is itself an estimated parent of `i`, `est` predicts no effect, which
/// is correct iff `j` is not a descendant of `i` in `truth`. Otherwise the
/// parent set must satisfy the generalized adjustment criterion: it contains
/// no descendant of a node on a causal path from `i` to `j`, and it
/// d-separates `i` and `j` once the first edge of every causal path is cut.
pub fn sid(truth: &Dag, est: &Dag) -> Result<usize> {
    check_dims(truth, est)?;
    let d = truth.num_vars();
    let adj = Adjacency::new(truth);
    let desc: Vec<Vec<bool>> = (0..d).map(|v| truth.descendants(v)).collect();
    let mut wrong = 0;
    let mut in_z = vec![false; d];
    for i in 0..d {
        let z = est.parents(i);
        in_z.iter_mut().for_each(|b| *b = false);
        for &v in &z {
            in_z[v] = true;
        }
        // pairs with j outside De(i): no causal paths, plain d-separation in truth
        let open = adj.reachable(i, &in_z, |_, _| false);
        for j in (0..d).filter(|&j| j != i) {
            if in_z[j] {
                if desc[i][j] {
                    wrong += 1;
                }
                continue;
            }
            if !desc[i][j] {
                if open[j] {
                    wrong += 1;
                }
                continue;
            }
            let on_causal: Vec<bool> = (0..d).map(|w| w != i && desc[i][w] && desc[w][j]).collect();
            let forbidden = z
                .iter()
                .any(|&v| (0..d).any(|w| on_causal[w] && desc[w][v]));
            if forbidden {
                wrong += 1;
                continue;
            }
            let reach = adj.reachable(i, &in_z, |from, to| from == i && on_causal[to]);
            if reach[j] {
                wrong += 1;
            }
        }
    }
    Ok(wrong)
}

/// All metrics at once.
pub fn evaluate(truth: &Dag, est: &Dag) -> Result<GraphMetrics> {
    let prf = edge_prf(truth, est)?;
    Ok(GraphMetrics {
        shd: shd(truth, est)?,
        sid: sid(truth, est)?,
        precision: prf.precision,
        recall: prf.recall,
        f1: prf.f1,
        num_edges_true: truth.num_edges(),
        num_edges_est: est.num_edges(),
    })
}
