use rand::seq::SliceRandom;
use rand::Rng;

use super::Dag;
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;

/// Erdős–Rényi DAG with `avg_edges` expected edges.
///
/// A uniformly random permutation fixes the causal order; each forward pair is
/// then included independently with probability `avg_edges / C(d, 2)`.
pub fn gen_erdos_renyi(d: usize, avg_edges: usize, seed: u64) -> Result<Dag> {
    if d == 0 {
        return Err(Error::invalid("d must be at least 1"));
    }
    let pairs = d * (d - 1) / 2;
    if avg_edges > pairs {
        return Err(Error::invalid(format!(
            "avg_edges = {avg_edges} exceeds the {pairs} available pairs for d = {d}"
        )));
    }
    let mut dag = Dag::empty(d);
    if pairs == 0 {
        return Ok(dag);
    }
    let p = avg_edges as f64 / pairs as f64;
    let mut rng = rng_from_seed(seed);
    let mut perm: Vec<usize> = (0..d).collect();
    perm.shuffle(&mut rng);
    for a in 0..d {
        for b in a + 1..d {
            if rng.gen::<f64>() < p {
                dag.adj[perm[a] * d + perm[b]] = true;
            }
        }
    }
    Ok(dag)
}

/// Scale-free DAG by preferential attachment.
///
/// Node `k` (in label order) draws `min(m, k)` distinct targets among the
/// earlier nodes with probability proportional to `degree + 1`, where degrees
/// are those before node `k` was added. Edges point from the earlier node to
/// the new one.
pub fn gen_scale_free(d: usize, m: usize, seed: u64) -> Result<Dag> {
    if d == 0 {
        return Err(Error::invalid("d must be at least 1"));
    }
    if d > 1 && (m == 0 || m >= d) {
        return Err(Error::invalid(format!(
            "need 1 <= m < d, got m = {m}, d = {d}"
        )));
    }
    let mut rng = rng_from_seed(seed);
    let mut dag = Dag::empty(d);
    let mut degree = vec![0usize; d];
    for k in 1..d {
        let take = m.min(k);
        let mut weights: Vec<f64> = (0..k).map(|u| (degree[u] + 1) as f64).collect();
        let mut chosen = Vec::with_capacity(take);
        for _ in 0..take {
            let total: f64 = weights.iter().sum();
            let mut target = rng.gen::<f64>() * total;
            let mut pick = None;
            for (u, &w) in weights.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                pick = Some(u);
                if target < w {
                    break;
                }
                target -= w;
            }
            let pick = pick.expect("at least one unchosen node");
            weights[pick] = 0.0;
            chosen.push(pick);
        }
        for &u in &chosen {
            dag.adj[u * d + k] = true;
            degree[u] += 1;
        }
        degree[k] += chosen.len();
    }
    Ok(dag)
}
