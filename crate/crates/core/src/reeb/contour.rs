//! Contour trees of piecewise-linear fields by merging the join and split
//! trees of the vertex graph.

use std::cmp::Ordering;

/// Vertex order with ties broken by index (simulation of simplicity).
pub(crate) fn sweep_order(values: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
    let mut rank = vec![0; values.len()];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }
    (order, rank)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// A merge tree: each vertex has at most one arc towards the sweep's end
/// (`next`) and any number of arcs back (`prev`).
struct MergeTree {
    next: Vec<Option<usize>>,
    prev: Vec<Vec<usize>>,
}

impl MergeTree {
    /// Sweeps vertices in `order`, joining components through the adjacency.
    fn sweep<'a>(
        order: impl Iterator<Item = &'a usize>,
        rank: &[usize],
        ascending: bool,
        adjacency: &[Vec<usize>],
    ) -> Self {
        let n = rank.len();
        let mut uf = UnionFind::new(n);
        let mut head = vec![usize::MAX; n];
        let mut tree = Self { next: vec![None; n], prev: vec![Vec::new(); n] };
        let before = |u: usize, v: usize| if ascending { rank[u] < rank[v] } else { rank[u] > rank[v] };
        for &v in order {
            for &u in &adjacency[v] {
                if !before(u, v) {
                    continue;
                }
                let (ru, rv) = (uf.find(u), uf.find(v));
                if ru != rv {
                    let h = head[ru];
                    tree.next[h] = Some(v);
                    tree.prev[v].push(h);
                    uf.parent[ru] = rv;
                }
            }
            let root = uf.find(v);
            head[root] = v;
        }
        tree
    }

    /// Removes a vertex with exactly one `prev` arc by joining its neighbors.
    fn splice(&mut self, x: usize) {
        let child = self.prev[x][0];
        let parent = self.next[x];
        self.next[child] = parent;
        if let Some(p) = parent {
            let slot = self.prev[p].iter().position(|&c| c == x).expect("consistent tree");
            self.prev[p][slot] = child;
        }
        self.prev[x].clear();
        self.next[x] = None;
    }

    /// Removes a leaf (no `prev` arcs) and returns its neighbor.
    fn detach_leaf(&mut self, x: usize) -> Option<usize> {
        let parent = self.next[x].take()?;
        self.prev[parent].retain(|&c| c != x);
        Some(parent)
    }
}

/// Arcs `(lower, upper)` of the contour tree, ordered by construction.
pub(crate) fn contour_arcs(values: &[f64], adjacency: &[Vec<usize>]) -> Vec<(usize, usize)> {
    let n = values.len();
    let (order, rank) = sweep_order(values);
    // join tree: ascending sweep, `next` points up; split tree: descending, `next` points down
    let mut join = MergeTree::sweep(order.iter(), &rank, true, adjacency);
    let mut split = MergeTree::sweep(order.iter().rev(), &rank, false, adjacency);

    let is_leaf = |j: &MergeTree, s: &MergeTree, x: usize| j.prev[x].len() + s.prev[x].len() == 1;
    let mut done = vec![false; n];
    let mut queued = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    for &x in &order {
        if is_leaf(&join, &split, x) {
            queue.push_back(x);
            queued[x] = true;
        }
    }
    let mut arcs = Vec::with_capacity(n.saturating_sub(1));
    while arcs.len() + 1 < n {
        let Some(x) = queue.pop_front() else { break };
        if done[x] || !is_leaf(&join, &split, x) {
            continue;
        }
        let neighbor = if split.prev[x].is_empty() {
            // upper leaf: its contour descends to the split-tree successor
            join.splice(x);
            split.detach_leaf(x)
        } else {
            // lower leaf: its contour ascends to the join-tree successor
            split.splice(x);
            join.detach_leaf(x)
        };
        done[x] = true;
        let Some(y) = neighbor else { continue };
        arcs.push(if rank[x] < rank[y] { (x, y) } else { (y, x) });
        if !done[y] && !queued[y] && is_leaf(&join, &split, y) {
            queue.push_back(y);
            queued[y] = true;
        }
    }
    arcs
}

#[cfg(test)]
mod tests {
    use super::*;

    /// A path graph is its own contour tree.
    #[test]
    fn path_graph() {
        let values = [0.0, 3.0, 1.0, 2.0];
        let adjacency = vec![vec![1], vec![0, 2], vec![1, 3], vec![2]];
        let mut arcs = contour_arcs(&values, &adjacency);
        arcs.sort();
        assert_eq!(arcs, vec![(0, 1), (2, 1), (2, 3)]);
    }
}
