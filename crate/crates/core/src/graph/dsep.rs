use super::Dag;
use crate::error::{Error, Result};

/// Adjacency lists of a DAG, the working form for path searches.
pub(crate) struct Adjacency {
    pub parents: Vec<Vec<usize>>,
    pub children: Vec<Vec<usize>>,
}

impl Adjacency {
    pub fn new(g: &Dag) -> Self {
        let d = g.num_vars();
        let mut parents = vec![Vec::new(); d];
        let mut children = vec![Vec::new(); d];
        for (j, i) in g.edges() {
            parents[i].push(j);
            children[j].push(i);
        }
        Adjacency { parents, children }
    }

    /// Nodes that are in `z` or have a descendant in `z`.
    fn ancestors_of(&self, in_z: &[bool]) -> Vec<bool> {
        let mut anc = in_z.to_vec();
        let mut stack: Vec<usize> = (0..in_z.len()).filter(|&v| in_z[v]).collect();
        while let Some(v) = stack.pop() {
            for &p in &self.parents[v] {
                if !anc[p] {
                    anc[p] = true;
                    stack.push(p);
                }
            }
        }
        anc
    }

    /// Bayes-ball reachability: marks every node d-connected to `source`
    /// given `in_z`. Edges for which `removed(from, to)` holds are ignored.
    pub fn reachable(
        &self,
        source: usize,
        in_z: &[bool],
        removed: impl Fn(usize, usize) -> bool,
    ) -> Vec<bool> {
        const UP: usize = 0; // entered from a child
        const DOWN: usize = 1; // entered from a parent
        let d = in_z.len();
        let anc = self.ancestors_of(in_z);
        let mut visited = vec![[false; 2]; d];
        let mut reach = vec![false; d];
        let mut queue = vec![(source, UP)];
        while let Some((v, dir)) = queue.pop() {
            if visited[v][dir] {
                continue;
            }
            visited[v][dir] = true;
            if !in_z[v] && v != source {
                reach[v] = true;
            }
            let up = |queue: &mut Vec<(usize, usize)>| {
                for &p in &self.parents[v] {
                    if !removed(p, v) {
                        queue.push((p, UP));
                    }
                }
            };
            let down = |queue: &mut Vec<(usize, usize)>| {
                for &c in &self.children[v] {
                    if !removed(v, c) {
                        queue.push((c, DOWN));
                    }
                }
            };
            if dir == UP && !in_z[v] {
                up(&mut queue);
                down(&mut queue);
            } else if dir == DOWN {
                if !in_z[v] {
                    down(&mut queue);
                }
                if anc[v] {
                    up(&mut queue);
                }
            }
        }
        reach
    }
}

/// Indicator of the nodes d-connected to `source` given `z` (excluding
/// `source` and the members of `z`).
pub fn d_connected_from(g: &Dag, source: usize, z: &[usize]) -> Vec<bool> {
    let mut in_z = vec![false; g.num_vars()];
    for &v in z {
        in_z[v] = true;
    }
    Adjacency::new(g).reachable(source, &in_z, |_, _| false)
}

/// True iff every path between `a` and `b` is blocked by `z`.
pub fn d_separated(g: &Dag, a: usize, b: usize, z: &[usize]) -> Result<bool> {
    let d = g.num_vars();
    if a >= d || b >= d || z.iter().any(|&v| v >= d) {
        return Err(Error::invalid("variable index out of range"));
    }
    if a == b {
        return Err(Error::invalid("d-separation needs two distinct variables"));
    }
    if z.contains(&a) || z.contains(&b) {
        return Err(Error::invalid("conditioning set overlaps the query pair"));
    }
    Ok(!d_connected_from(g, a, z)[b])
}
