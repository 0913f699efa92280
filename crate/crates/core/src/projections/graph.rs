//! Neighbourhood graphs and shortest paths.
//!
//! Topology is chosen on the value channel; edge weights and path lengths
//! carry whatever scalar type the data has. Dijkstra only compares values,
//! so a dual run follows exactly the same paths as the plain run.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::DataMatrix;
use crate::autodiff::Scalar;
use crate::linalg::DenseMatrix;

/// Indices of the `k` nearest neighbours of every point, nearest first.
/// Ties are broken by index.
pub fn knn_indices<S: Scalar>(data: &DataMatrix<S>, k: usize) -> Vec<Vec<usize>> {
    let n = data.n();
    (0..n)
        .map(|i| {
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| (data.squared_distance(i, j).value(), j))
                .collect();
            cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            cand.truncate(k);
            cand.into_iter().map(|(_, j)| j).collect()
        })
        .collect()
}

/// Undirected adjacency lists: `j` is adjacent to `i` when either is among
/// the other's nearest neighbours.
pub fn union_adjacency(knn: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = knn.len();
    let mut adj = vec![Vec::new(); n];
    for (i, nbrs) in knn.iter().enumerate() {
        for &j in nbrs {
            adj[i].push(j);
            adj[j].push(i);
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    adj
}

/// Sizes of the connected components, largest first.
pub fn component_sizes(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut sizes = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![s];
        let mut size = 0;
        while let Some(u) = stack.pop() {
            size += 1;
            for &v in &adj[u] {
                if !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    sizes
}

/// Weighted undirected graph in adjacency-list form.
#[derive(Debug, Clone)]
pub struct WeightedGraph<S> {
    pub adj: Vec<Vec<(usize, S)>>,
}

impl<S: Scalar> WeightedGraph<S> {
    pub fn from_edges(n: usize, edges: &[(usize, usize, S)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(a, b, w) in edges {
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        Self { adj }
    }

    /// Neighbourhood graph with Euclidean edge weights.
    pub fn neighbourhood(data: &DataMatrix<S>, adjacency: &[Vec<usize>]) -> Self {
        let adj = adjacency
            .iter()
            .enumerate()
            .map(|(i, nbrs)| nbrs.iter().map(|&j| (j, data.distance(i, j))).collect())
            .collect();
        Self { adj }
    }

    pub fn len(&self) -> usize {
        self.adj.len()
    }

    pub fn is_empty(&self) -> bool {
        self.adj.is_empty()
    }

    /// Single-source shortest path lengths; `None` for unreachable nodes.
    pub fn dijkstra(&self, source: usize) -> Vec<Option<S>> {
        let n = self.adj.len();
        let mut dist: Vec<Option<S>> = vec![None; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        dist[source] = Some(S::zero());
        heap.push(Reverse((Key(0.0), source)));
        while let Some(Reverse((Key(d), u))) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            let du = dist[u].expect("settled node has a distance");
            debug_assert_eq!(du.value(), d);
            for &(v, w) in &self.adj[u] {
                if done[v] {
                    continue;
                }
                let cand = du + w;
                let better = match dist[v] {
                    None => true,
                    Some(old) => cand.value() < old.value(),
                };
                if better {
                    dist[v] = Some(cand);
                    heap.push(Reverse((Key(cand.value()), v)));
                }
            }
        }
        dist
    }

    /// All-pairs shortest paths by repeated Dijkstra. Entry `(i, j)` with
    /// `i < j` is taken from the run sourced at `i` and mirrored, so the
    /// result is exactly symmetric. Returns `None` when disconnected.
    pub fn all_pairs(&self) -> Option<DenseMatrix<S>> {
        let n = self.adj.len();
        let mut out = DenseMatrix::zeros(n, n);
        for i in 0..n {
            let dist = self.dijkstra(i);
            for (j, d) in dist.into_iter().enumerate().skip(i + 1) {
                let d = d?;
                out.set(i, j, d);
                out.set(j, i, d);
            }
        }
        Some(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}
