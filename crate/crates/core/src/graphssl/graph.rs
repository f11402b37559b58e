//! Sparse symmetric weighted similarity graphs.

use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Edge {
    pub to: usize,
    pub weight: f64,
    /// Position of the reciprocal edge in `adj[to]`.
    pub rev: usize,
}

/// Undirected weighted graph stored as symmetric adjacency lists; an edge
/// exists iff its weight is positive, the diagonal is empty, and
/// `w_ij == w_ji` exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityGraph {
    adj: Vec<Vec<Edge>>,
}

impl SimilarityGraph {
    /// Builds a graph from undirected edges `(i, j, w)`. Self-loops,
    /// non-positive weights, and duplicate pairs are rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adj: Vec<Vec<Edge>> = vec![Vec::new(); n];
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(Error::InvalidParam(format!(
                    "edge ({i}, {j}) out of bounds for {n} nodes"
                )));
            }
            if i == j {
                return Err(Error::InvalidParam(format!("self-loop at node {i}")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidParam(format!(
                    "edge ({i}, {j}) must have a positive finite weight, got {w}"
                )));
            }
            if adj[i].iter().any(|e| e.to == j) {
                return Err(Error::InvalidParam(format!("duplicate edge ({i}, {j})")));
            }
            let pos_i = adj[i].len();
            let pos_j = adj[j].len();
            adj[i].push(Edge {
                to: j,
                weight: w,
                rev: pos_j,
            });
            adj[j].push(Edge {
                to: i,
                weight: w,
                rev: pos_i,
            });
        }
        Ok(Self { adj })
    }

    pub fn n_nodes(&self) -> usize {
        self.adj.len()
    }

    /// Number of undirected edges.
    pub fn n_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub(crate) fn neighbors(&self, i: usize) -> &[Edge] {
        &self.adj[i]
    }

    /// Neighbor ids and weights of node `i`.
    pub fn neighbors_of(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.adj[i].iter().map(|e| (e.to, e.weight))
    }

    /// Weight of edge `(i, j)`, or 0 when absent.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adj[i]
            .iter()
            .find(|e| e.to == j)
            .map_or(0.0, |e| e.weight)
    }
}

/// Builds the k-nearest-neighbor similarity graph over row-major points.
///
/// Nodes `i` and `j` are connected iff `i` is among the k nearest neighbors
/// of `j` or vice versa (OR-symmetrization); the weight is the Gaussian
/// similarity `exp(-d(x_i, x_j) / t)` of the plain Euclidean distance.
/// Identical points get weight 1. Neighbor ties at the cutoff break toward
/// the lower index.
pub fn build_knn_graph(
    points: &[f64],
    n_features: usize,
    k: usize,
    t: f64,
) -> Result<SimilarityGraph> {
    if n_features == 0 || points.len() % n_features != 0 {
        return Err(Error::InvalidParam("bad point matrix shape".into()));
    }
    let n = points.len() / n_features;
    if k == 0 || k >= n {
        return Err(Error::InvalidParam(format!(
            "k must be in 1..{n}, got {k}"
        )));
    }
    if !(t > 0.0) || !t.is_finite() {
        return Err(Error::InvalidParam(format!("t must be > 0, got {t}")));
    }
    let row = |i: usize| &points[i * n_features..(i + 1) * n_features];

    // k nearest per node by Euclidean distance, excluding the node itself
    let knn: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = row(i);
            let mut dists: Vec<(usize, f64)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| {
                    let d2: f64 = xi
                        .iter()
                        .zip(row(j))
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum();
                    (j, d2.sqrt())
                })
                .collect();
            dists.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
            dists.truncate(k);
            dists
        })
        .collect();

    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    let mut seen: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, neighbors) in knn.iter().enumerate() {
        for &(j, d) in neighbors {
            let (a, b) = if i < j { (i, j) } else { (j, i) };
            if seen[a].contains(&b) {
                continue;
            }
            seen[a].push(b);
            edges.push((a, b, (-d / t).exp()));
        }
    }
    SimilarityGraph::from_edges(n, &edges)
}
