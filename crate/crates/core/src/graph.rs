//! The correspondence compatibility graph: vertices are tentative matches,
//! edges join pairs whose reference-side and query-side distances agree
//! within a tolerance (a necessary condition for a common rigid transform).

use thiserror::Error;

use crate::matching::{Correspondence, CorrespondenceSet};

/// Pairwise rigidity tolerance default, meters (3D voxel-scale).
pub const DEFAULT_EPSILON: f64 = 1.0;
/// Vertex cap keeping bitset rows compact.
pub const MAX_GRAPH_VERTICES: usize = 65_535;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("dimension mismatch between correspondences")]
    DimMismatch,
    #[error("epsilon must be positive, got {0}")]
    NonPositiveEpsilon(f64),
    #[error("too many vertices: {n} (max {max})")]
    TooManyVertices { n: usize, max: usize },
}

/// Undirected graph over `0..n` with bitset adjacency rows.
#[derive(Debug, Clone, PartialEq)]
pub struct BitGraph {
    n: usize,
    words: usize,
    rows: Vec<u64>,
}

impl BitGraph {
    pub fn new(n: usize) -> BitGraph {
        let words = n.div_ceil(64).max(1);
        BitGraph {
            n,
            words,
            rows: vec![0; n * words],
        }
    }

    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> BitGraph {
        let mut g = BitGraph::new(n);
        for &(u, v) in edges {
            g.add_edge(u, v);
        }
        g
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn add_edge(&mut self, u: usize, v: usize) {
        assert!(u != v, "self loops are not allowed");
        assert!(u < self.n && v < self.n);
        self.rows[u * self.words + v / 64] |= 1 << (v % 64);
        self.rows[v * self.words + u / 64] |= 1 << (u % 64);
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.rows[u * self.words + v / 64] & (1 << (v % 64)) != 0
    }

    pub fn degree(&self, u: usize) -> usize {
        self.row(u).iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn row(&self, u: usize) -> &[u64] {
        &self.rows[u * self.words..(u + 1) * self.words]
    }

    pub fn edge_count(&self) -> usize {
        self.rows
            .iter()
            .map(|w| w.count_ones() as usize)
            .sum::<usize>()
            / 2
    }

    /// Ascending neighbor list of `u`.
    pub fn neighbors(&self, u: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for (wi, &w) in self.row(u).iter().enumerate() {
            let mut bits = w;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                out.push(wi * 64 + b);
                bits &= bits - 1;
            }
        }
        out
    }
}

/// Pairwise rigidity test: `| ||m_a - m_b|| - ||q_a - q_b|| | < epsilon`
/// (strict).
pub fn consistent(
    a: &Correspondence,
    b: &Correspondence,
    epsilon: f64,
) -> Result<bool, GraphError> {
    if a.m.dim() != b.m.dim() || a.q.dim() != b.q.dim() || a.m.dim() != a.q.dim() {
        return Err(GraphError::DimMismatch);
    }
    check_epsilon(epsilon)?;
    Ok(consistent_unchecked(a, b, epsilon))
}

fn check_epsilon(epsilon: f64) -> Result<(), GraphError> {
    if !epsilon.is_finite() || epsilon <= 0.0 {
        return Err(GraphError::NonPositiveEpsilon(epsilon));
    }
    Ok(())
}

#[inline]
fn consistent_unchecked(a: &Correspondence, b: &Correspondence, epsilon: f64) -> bool {
    let dm = a.m.distance_to(&b.m);
    let dq = a.q.distance_to(&b.q);
    (dm - dq).abs() < epsilon
}

/// Correspondence graph: one vertex per correspondence, edges where the
/// pairwise rigidity test holds.
#[derive(Debug, Clone)]
pub struct CompatibilityGraph {
    correspondences: CorrespondenceSet,
    graph: BitGraph,
    epsilon: f64,
}

impl CompatibilityGraph {
    pub fn correspondences(&self) -> &CorrespondenceSet {
        &self.correspondences
    }

    pub fn graph(&self) -> &BitGraph {
        &self.graph
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn vertex_count(&self) -> usize {
        self.graph.n()
    }

    /// Exact maximum clique over this graph.
    pub fn max_clique(&self, budget: Option<u64>) -> crate::clique::CliqueResult {
        crate::clique::max_clique(&self.graph, budget)
    }

    /// Debug dump: vertex-count header, then one `i: j,k,l` neighbor line
    /// per vertex.
    pub fn dump(&self) -> String {
        let mut out = format!("vertices: {}\n", self.graph.n());
        for u in 0..self.graph.n() {
            let neighbors: Vec<String> = self
                .graph
                .neighbors(u)
                .iter()
                .map(|v| v.to_string())
                .collect();
            if neighbors.is_empty() {
                out.push_str(&format!("{u}:\n"));
            } else {
                out.push_str(&format!("{u}: {}\n", neighbors.join(",")));
            }
        }
        out
    }
}

/// Evaluates all pairs and assembles the compatibility graph.
/// Deterministic for a fixed input order.
pub fn build_graph(c: &CorrespondenceSet, epsilon: f64) -> Result<CompatibilityGraph, GraphError> {
    check_epsilon(epsilon)?;
    let n = c.len();
    if n > MAX_GRAPH_VERTICES {
        return Err(GraphError::TooManyVertices {
            n,
            max: MAX_GRAPH_VERTICES,
        });
    }
    let mut graph = BitGraph::new(n);
    let items = c.items();
    for i in 0..n {
        for j in (i + 1)..n {
            if consistent_unchecked(&items[i], &items[j], epsilon) {
                graph.add_edge(i, j);
            }
        }
    }
    Ok(CompatibilityGraph {
        correspondences: c.clone(),
        graph,
        epsilon,
    })
}
