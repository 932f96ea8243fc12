//! Reference implementations shared by integration tests. Each one is written
//! from the definition, independently of the library's algorithms.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use sartre::embed::{fit_randomized_trees, Embedding, TreeConfig};
use sartre::grouplasso::{DesignBlock, GroupedDesign};
use sartre::seed::rng_from_seed;
use sartre::{Dag, Dataset};
use std::sync::Arc;

/// Every DAG on `d` labelled nodes.
pub fn all_dags(d: usize) -> Vec<Dag> {
    let pairs: Vec<(usize, usize)> = (0..d)
        .flat_map(|a| (a + 1..d).map(move |b| (a, b)))
        .collect();
    let mut out = Vec::new();
    let total = 3usize.pow(pairs.len() as u32);
    for code in 0..total {
        let mut c = code;
        let mut edges = Vec::new();
        for &(a, b) in &pairs {
            match c % 3 {
                1 => edges.push((a, b)),
                2 => edges.push((b, a)),
                _ => {}
            }
            c /= 3;
        }
        if let Ok(g) = Dag::from_edges(d, &edges) {
            out.push(g);
        }
    }
    out
}

fn descendants_of(g: &Dag, v: usize) -> Vec<bool> {
    let d = g.num_vars();
    let mut seen = vec![false; d];
    let mut stack = vec![v];
    seen[v] = true;
    while let Some(u) = stack.pop() {
        for w in 0..d {
            if g.has_edge(u, w) && !seen[w] {
                seen[w] = true;
                stack.push(w);
            }
        }
    }
    seen
}

/// All simple paths from `a` to `b` in the skeleton of `g`.
fn simple_paths(g: &Dag, a: usize, b: usize) -> Vec<Vec<usize>> {
    fn walk(g: &Dag, path: &mut Vec<usize>, b: usize, out: &mut Vec<Vec<usize>>) {
        let u = *path.last().unwrap();
        if u == b {
            out.push(path.clone());
            return;
        }
        for w in 0..g.num_vars() {
            if (g.has_edge(u, w) || g.has_edge(w, u)) && !path.contains(&w) {
                path.push(w);
                walk(g, path, b, out);
                path.pop();
            }
        }
    }
    let mut out = Vec::new();
    walk(g, &mut vec![a], b, &mut out);
    out
}

fn is_directed(g: &Dag, path: &[usize]) -> bool {
    path.windows(2).all(|w| g.has_edge(w[0], w[1]))
}

/// Whether `path` is open given conditioning set `z`.
fn path_open(g: &Dag, path: &[usize], z: &[bool]) -> bool {
    for k in 1..path.len() - 1 {
        let (p, v, n) = (path[k - 1], path[k], path[k + 1]);
        let collider = g.has_edge(p, v) && g.has_edge(n, v);
        if collider {
            let de = descendants_of(g, v);
            if !(0..g.num_vars()).any(|w| de[w] && z[w]) {
                return false;
            }
        } else if z[v] {
            return false;
        }
    }
    true
}

/// Whether adjusting for `z` identifies the effect of `x` on `y` in `g`,
/// by the adjustment criterion checked path by path.
fn valid_adjustment(g: &Dag, x: usize, y: usize, z: &[bool]) -> bool {
    let paths = simple_paths(g, x, y);
    let mut forbidden = vec![false; g.num_vars()];
    for p in paths.iter().filter(|p| is_directed(g, p)) {
        for &w in &p[1..] {
            for (f, de) in forbidden.iter_mut().zip(descendants_of(g, w)) {
                *f |= de;
            }
        }
    }
    if (0..g.num_vars()).any(|w| forbidden[w] && z[w]) {
        return false;
    }
    paths
        .iter()
        .filter(|p| !is_directed(g, p))
        .all(|p| !path_open(g, p, z))
}

/// Whether adjusting for `z` (the estimated parents of `i`) misjudges the
/// effect of `i` on `j` under `truth`.
pub fn pair_wrong(truth: &Dag, i: usize, j: usize, z: &[bool]) -> bool {
    if z[j] {
        descendants_of(truth, i)[j]
    } else {
        !valid_adjustment(truth, i, j, z)
    }
}

/// Structural intervention distance by enumerating paths.
pub fn sid_bruteforce(truth: &Dag, est: &Dag) -> usize {
    let d = truth.num_vars();
    let mut count = 0;
    for i in 0..d {
        let mut z = vec![false; d];
        for p in est.parents(i) {
            z[p] = true;
        }
        count += (0..d)
            .filter(|&j| j != i && pair_wrong(truth, i, j, &z))
            .count();
    }
    count
}

/// Group-lasso objective `‖y − ȳ − Xβ‖² + λ Σ‖β_g‖` with groups given by sizes.
pub fn gl_objective(
    x: &DMatrix<f64>,
    sizes: &[usize],
    y: &[f64],
    beta: &[f64],
    lambda: f64,
) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let b = DVector::from_column_slice(beta);
    let r = DVector::from_iterator(y.len(), y.iter().map(|v| v - mean)) - x * b;
    let mut pen = 0.0;
    let mut s = 0;
    for &len in sizes {
        pen += beta[s..s + len].iter().map(|v| v * v).sum::<f64>().sqrt();
        s += len;
    }
    r.norm_squared() + lambda * pen
}

/// Largest KKT violation of `beta`, computed from the raw gradient.
pub fn gl_kkt(x: &DMatrix<f64>, sizes: &[usize], y: &[f64], beta: &[f64], lambda: f64) -> f64 {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let b = DVector::from_column_slice(beta);
    let r = DVector::from_iterator(y.len(), y.iter().map(|v| v - mean)) - x * b;
    let grad = -2.0 * x.transpose() * r;
    let mut worst: f64 = 0.0;
    let mut s = 0;
    for &len in sizes {
        let g = grad.rows(s, len).into_owned();
        let bg = DVector::from_column_slice(&beta[s..s + len]);
        let v = if bg.norm() == 0.0 {
            (g.norm() - lambda).max(0.0)
        } else {
            (g + lambda * &bg / bg.norm()).norm()
        };
        worst = worst.max(v);
        s += len;
    }
    worst
}

/// Accelerated proximal gradient with restarts, run for a fixed budget.
pub fn gl_reference(
    x: &DMatrix<f64>,
    sizes: &[usize],
    y: &[f64],
    lambda: f64,
    iters: usize,
) -> Vec<f64> {
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let yc = DVector::from_iterator(y.len(), y.iter().map(|v| v - mean));
    let xtx = x.transpose() * x;
    let xty = x.transpose() * &yc;
    let lip = 2.0 * xtx.clone().symmetric_eigenvalues().max().max(1e-12);
    let step = 1.0 / lip;
    let p = x.ncols();
    let prox = |v: DVector<f64>| {
        let mut out = v.clone();
        let mut s = 0;
        for &len in sizes {
            let n = v.rows(s, len).norm();
            let shrink = if n > 0.0 {
                (1.0 - step * lambda / n).max(0.0)
            } else {
                0.0
            };
            for k in s..s + len {
                out[k] = v[k] * shrink;
            }
            s += len;
        }
        out
    };
    let f = |b: &DVector<f64>| gl_objective(x, sizes, y, b.as_slice(), lambda);
    let mut beta = DVector::zeros(p);
    let mut mom = beta.clone();
    let mut t = 1.0f64;
    let mut prev = f(&beta);
    for _ in 0..iters {
        let grad = 2.0 * (&xtx * &mom - &xty);
        let next = prox(&mom - step * grad);
        let val = f(&next);
        if val > prev {
            mom = beta.clone();
            t = 1.0;
            continue;
        }
        let t_next = (1.0 + (1.0 + 4.0 * t * t).sqrt()) / 2.0;
        mom = &next + (t - 1.0) / t_next * (&next - &beta);
        beta = next;
        t = t_next;
        prev = val;
    }
    beta.as_slice().to_vec()
}

/// A binary design built from randomized-tree embeddings of `groups`
/// independent Gaussian inputs, plus a nonlinear response.
pub fn random_binary_instance(
    seed: u64,
    n: usize,
    groups: usize,
    trees: TreeConfig,
) -> (GroupedDesign, DMatrix<f64>, Vec<usize>, Vec<f64>) {
    let mut rng = rng_from_seed(seed);
    let cols: Vec<Vec<f64>> = (0..groups)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    let active = rng.gen_range(1..=groups);
    let y: Vec<f64> = (0..n)
        .map(|m| {
            let signal: f64 = (0..active)
                .map(|g| (cols[g][m] * (g as f64 + 1.0)).sin())
                .sum();
            let z: f64 = StandardNormal.sample(&mut rng);
            signal + 0.5 * z
        })
        .collect();
    let blocks: Vec<Arc<DesignBlock>> = cols
        .iter()
        .enumerate()
        .map(|(g, col)| {
            let cfg = TreeConfig {
                seed: seed.wrapping_add(g as u64),
                ..trees.clone()
            };
            let rset = fit_randomized_trees(g, col, &cfg).unwrap();
            Arc::new(DesignBlock::binary(
                g,
                Arc::new(Embedding::of_column(col.iter().copied(), &rset)),
            ))
        })
        .collect();
    let design = GroupedDesign::new(blocks).unwrap();
    let dense = DMatrix::from_fn(n, design.p(), |m, k| {
        let mut e = vec![0.0; design.p()];
        e[k] = 1.0;
        design.predict(&e)[m]
    });
    let sizes = design.spans().iter().map(|s| s.len).collect();
    (design, dense, sizes, y)
}

/// Four variables with order (2,3,1,4) and edges 2→3, 3→1, 1→4, 2→4
/// (1-based): X₄ depends on X₂ and X₁ only, and X₃ reaches X₄ only through X₁.
pub fn mediated_dataset(seed: u64, n: usize) -> Dataset {
    let mut rng = rng_from_seed(seed);
    let mut noise = |s: f64| -> f64 {
        let z: f64 = StandardNormal.sample(&mut rng);
        s * z
    };
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| {
            let x2 = noise(1.0);
            let x3 = (1.5 * x2).sin() + noise(0.5);
            let x1 = 2.0 * x3.tanh() + noise(0.5);
            let x4 = 0.5 * x2 * x2 + (1.5 * x1).sin() + noise(0.5);
            vec![x1, x2, x3, x4]
        })
        .collect();
    Dataset::from_rows(&rows).unwrap()
}
