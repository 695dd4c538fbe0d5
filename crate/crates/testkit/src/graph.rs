//! Brute-force order oracles over small directed graphs given as edge lists.

use std::collections::{BTreeMap, BTreeSet};

/// Boolean transitive closure via Warshall's algorithm. Node ids are
/// compacted to `0..n` in ascending order.
pub struct Closure {
    ids: Vec<u64>,
    reach: Vec<Vec<bool>>,
}

impl Closure {
    pub fn new(nodes: &[u64], edges: &[(u64, u64)]) -> Self {
        let ids: Vec<u64> = nodes.iter().copied().collect::<BTreeSet<_>>().into_iter().collect();
        let pos: BTreeMap<u64, usize> = ids.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        let n = ids.len();
        let mut reach = vec![vec![false; n]; n];
        for &(a, b) in edges {
            reach[pos[&a]][pos[&b]] = true;
        }
        for k in 0..n {
            let through = reach[k].clone();
            for row in reach.iter_mut().filter(|row| row[k]) {
                for (cell, &via) in row.iter_mut().zip(&through) {
                    *cell |= via;
                }
            }
        }
        Closure { ids, reach }
    }

    fn idx(&self, id: u64) -> usize {
        self.ids.binary_search(&id).expect("node present")
    }

    pub fn reaches(&self, a: u64, b: u64) -> bool {
        self.reach[self.idx(a)][self.idx(b)]
    }

    pub fn is_irreflexive(&self) -> bool {
        (0..self.ids.len()).all(|i| !self.reach[i][i])
    }

    pub fn is_antisymmetric(&self) -> bool {
        let n = self.ids.len();
        (0..n).all(|i| (0..n).all(|j| i == j || !(self.reach[i][j] && self.reach[j][i])))
    }

    pub fn is_transitive(&self) -> bool {
        let n = self.ids.len();
        (0..n).all(|i| {
            (0..n).all(|j| !self.reach[i][j] || (0..n).all(|k| !self.reach[j][k] || self.reach[i][k]))
        })
    }
}

/// Depth-first topological sort. Returns `None` when the graph has a cycle.
pub fn topo_sort(nodes: &[u64], edges: &[(u64, u64)]) -> Option<Vec<u64>> {
    let mut adj: BTreeMap<u64, Vec<u64>> = nodes.iter().map(|&n| (n, Vec::new())).collect();
    for &(a, b) in edges {
        adj.entry(a).or_default().push(b);
        adj.entry(b).or_default();
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut mark: BTreeMap<u64, u8> = adj.keys().map(|&k| (k, 0)).collect();
    let mut out = Vec::with_capacity(adj.len());
    for &root in adj.keys() {
        if mark[&root] != 0 {
            continue;
        }
        let mut stack = vec![(root, 0usize)];
        mark.insert(root, 1);
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            let succ = &adj[&node];
            if *next < succ.len() {
                let child = succ[*next];
                *next += 1;
                match mark[&child] {
                    0 => {
                        mark.insert(child, 1);
                        stack.push((child, 0));
                    }
                    1 => return None,
                    _ => {}
                }
            } else {
                mark.insert(node, 2);
                out.push(node);
                stack.pop();
            }
        }
    }
    out.reverse();
    Some(out)
}

/// True when `order` places every edge's source before its target.
pub fn respects(order: &[u64], edges: &[(u64, u64)]) -> bool {
    let pos: BTreeMap<u64, usize> = order.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    edges.iter().all(|(a, b)| pos[a] < pos[b])
}
