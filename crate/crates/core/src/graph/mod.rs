//! DAGs, topological orders, random graph families and graph-accuracy metrics.
//!
//! Variables are 0-based inside the crate. The text formats in [`io`] are
//! 1-based, matching the `x1..xd` column naming of datasets.

mod dsep;
mod generate;
pub mod io;
mod metrics;

pub use dsep::{d_connected_from, d_separated};
pub use generate::{gen_erdos_renyi, gen_scale_free};
pub use metrics::{
    edge_prf, evaluate, shd, sid, GraphMetrics, PrecisionRecall, METRIC_CONVENTIONS,
};

use crate::error::{Error, Result};

/// A directed acyclic graph over `num_vars` variables, stored as a dense
/// adjacency matrix (`adj[j * d + i]` ⇔ edge `j → i`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Dag {
    num_vars: usize,
    adj: Vec<bool>,
}

impl Dag {
    pub fn empty(num_vars: usize) -> Self {
        Dag {
            num_vars,
            adj: vec![false; num_vars * num_vars],
        }
    }

    /// Builds a DAG from `(parent, child)` pairs, rejecting self-loops,
    /// out-of-range endpoints and cycles.
    pub fn from_edges(num_vars: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut dag = Dag::empty(num_vars);
        for &(j, i) in edges {
            if j >= num_vars || i >= num_vars {
                return Err(Error::invalid(format!(
                    "edge ({j}, {i}) out of range for {num_vars} variables"
                )));
            }
            if j == i {
                return Err(Error::invalid(format!("self-loop on variable {i}")));
            }
            dag.adj[j * num_vars + i] = true;
        }
        if dag.topological_sort().is_none() {
            return Err(Error::invalid("edge set contains a cycle"));
        }
        Ok(dag)
    }

    /// The complete DAG induced by `order`: `j → i` iff `j` precedes `i`.
    pub fn full_from_order(order: &TopologicalOrder) -> Self {
        let d = order.len();
        let mut dag = Dag::empty(d);
        let perm = order.as_slice();
        for (a, &j) in perm.iter().enumerate() {
            for &i in &perm[a + 1..] {
                dag.adj[j * d + i] = true;
            }
        }
        dag
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.adj[from * self.num_vars + to]
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().filter(|&&e| e).count()
    }

    /// Edges in lexicographic `(parent, child)` order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let d = self.num_vars;
        (0..d)
            .flat_map(|j| (0..d).map(move |i| (j, i)))
            .filter(|&(j, i)| self.adj[j * d + i])
            .collect()
    }

    pub fn parents(&self, i: usize) -> Vec<usize> {
        (0..self.num_vars)
            .filter(|&j| self.has_edge(j, i))
            .collect()
    }

    pub fn children(&self, j: usize) -> Vec<usize> {
        (0..self.num_vars)
            .filter(|&i| self.has_edge(j, i))
            .collect()
    }

    /// Removing an edge can never create a cycle, so this stays infallible.
    pub fn remove_edge(&mut self, from: usize, to: usize) {
        self.adj[from * self.num_vars + to] = false;
    }

    /// Adds `from → to`, failing if the result would be cyclic.
    pub fn add_edge(&mut self, from: usize, to: usize) -> Result<()> {
        if from == to || from >= self.num_vars || to >= self.num_vars {
            return Err(Error::invalid(format!("invalid edge ({from}, {to})")));
        }
        if self.is_ancestor(to, from) {
            return Err(Error::invalid(format!(
                "edge ({from}, {to}) would create a cycle"
            )));
        }
        self.adj[from * self.num_vars + to] = true;
        Ok(())
    }

    /// True iff `a` has a directed path to `b` (a node is its own ancestor).
    pub fn is_ancestor(&self, a: usize, b: usize) -> bool {
        self.descendants(a)[b]
    }

    /// Indicator of all descendants of `v`, including `v` itself.
    pub fn descendants(&self, v: usize) -> Vec<bool> {
        let mut seen = vec![false; self.num_vars];
        let mut stack = vec![v];
        seen[v] = true;
        while let Some(u) = stack.pop() {
            for w in 0..self.num_vars {
                if self.has_edge(u, w) && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    }

    /// Kahn's algorithm, taking the smallest ready index first. `None` on a cycle.
    pub fn topological_sort(&self) -> Option<TopologicalOrder> {
        let d = self.num_vars;
        let mut indeg: Vec<usize> = (0..d).map(|i| self.parents(i).len()).collect();
        let mut ready: std::collections::BTreeSet<usize> =
            (0..d).filter(|&i| indeg[i] == 0).collect();
        let mut perm = Vec::with_capacity(d);
        while let Some(u) = ready.pop_first() {
            perm.push(u);
            for w in 0..d {
                if self.has_edge(u, w) {
                    indeg[w] -= 1;
                    if indeg[w] == 0 {
                        ready.insert(w);
                    }
                }
            }
        }
        (perm.len() == d).then_some(TopologicalOrder { perm })
    }

    /// Edge-set inclusion.
    pub fn is_subgraph_of(&self, other: &Dag) -> bool {
        self.num_vars == other.num_vars && self.adj.iter().zip(&other.adj).all(|(&a, &b)| !a || b)
    }
}

/// A permutation of the variables, roots first.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TopologicalOrder {
    perm: Vec<usize>,
}

impl TopologicalOrder {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let d = perm.len();
        let mut seen = vec![false; d];
        for &v in &perm {
            if v >= d || seen[v] {
                return Err(Error::invalid(format!(
                    "{perm:?} is not a permutation of 0..{d}"
                )));
            }
            seen[v] = true;
        }
        Ok(TopologicalOrder { perm })
    }

    pub fn identity(d: usize) -> Self {
        TopologicalOrder {
            perm: (0..d).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    /// `position()[v]` is the rank of variable `v` in the order.
    pub fn position(&self) -> Vec<usize> {
        let mut pos = vec![0; self.perm.len()];
        for (rank, &v) in self.perm.iter().enumerate() {
            pos[v] = rank;
        }
        pos
    }

    /// Variables preceding `v`, in order.
    pub fn predecessors(&self, v: usize) -> &[usize] {
        let rank = self
            .perm
            .iter()
            .position(|&u| u == v)
            .expect("variable in order");
        &self.perm[..rank]
    }

    /// Every edge of `dag` points from an earlier to a later variable.
    pub fn is_consistent_with(&self, dag: &Dag) -> bool {
        if dag.num_vars() != self.len() {
            return false;
        }
        let pos = self.position();
        dag.edges().into_iter().all(|(j, i)| pos[j] < pos[i])
    }
}
