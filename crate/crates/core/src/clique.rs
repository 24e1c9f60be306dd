//! Exact, deterministic maximum-clique search.
//!
//! Branch-and-bound over bitset candidate sets with a greedy-coloring upper
//! bound (vertices statically ordered by descending degree). A completed
//! search is followed by a reconstruction pass that returns, among all
//! maximum cliques, the lexicographically smallest vertex-index set, so
//! ties break identically everywhere. `brute_force_max_clique` is the
//! subset-enumeration oracle for small graphs.

use thiserror::Error;

use crate::graph::BitGraph;

/// Vertex cap for the exhaustive oracle.
pub const BRUTE_FORCE_MAX_VERTICES: usize = 25;

#[derive(Debug, Error, PartialEq)]
pub enum CliqueError {
    #[error("graph too large for brute force: {n} vertices (max {max})")]
    GraphTooLarge { n: usize, max: usize },
}

/// Result of a clique search.
#[derive(Debug, Clone, PartialEq)]
pub struct CliqueResult {
    /// Clique vertex indices, sorted ascending.
    pub vertices: Vec<usize>,
    pub size: usize,
    /// False iff the node budget ran out before the search completed.
    pub optimal: bool,
    /// Search-tree nodes expanded (both search and reconstruction).
    pub nodes_explored: u64,
}

struct Searcher {
    words: usize,
    /// Adjacency bitsets in search-position space.
    adj: Vec<u64>,
    best: Vec<usize>,
    best_size: usize,
    nodes: u64,
    budget: Option<u64>,
    exhausted: bool,
}

impl Searcher {
    fn row(&self, v: usize) -> &[u64] {
        &self.adj[v * self.words..(v + 1) * self.words]
    }

    fn charge_node(&mut self) -> bool {
        self.nodes += 1;
        if let Some(b) = self.budget {
            if self.nodes > b {
                self.exhausted = true;
                return true;
            }
        }
        false
    }

    /// Greedy sequential coloring of the candidate set. Returns the
    /// candidates sorted by color ascending, with their (1-based) colors.
    fn color(&self, p: &[u64]) -> (Vec<usize>, Vec<usize>) {
        let mut class_sets: Vec<Vec<u64>> = Vec::new();
        let mut class_members: Vec<Vec<usize>> = Vec::new();
        for v in iter_bits(p) {
            let row = self.row(v);
            let mut placed = false;
            for (ci, class) in class_sets.iter_mut().enumerate() {
                if class.iter().zip(row).all(|(c, r)| c & r == 0) {
                    class[v / 64] |= 1 << (v % 64);
                    class_members[ci].push(v);
                    placed = true;
                    break;
                }
            }
            if !placed {
                let mut set = vec![0u64; self.words];
                set[v / 64] |= 1 << (v % 64);
                class_sets.push(set);
                class_members.push(vec![v]);
            }
        }
        let mut verts = Vec::new();
        let mut colors = Vec::new();
        for (ci, members) in class_members.iter().enumerate() {
            for &v in members {
                verts.push(v);
                colors.push(ci + 1);
            }
        }
        (verts, colors)
    }

    fn expand(&mut self, current: &mut Vec<usize>, p: Vec<u64>) {
        if self.charge_node() {
            return;
        }
        let (verts, colors) = self.color(&p);
        let mut p = p;
        for i in (0..verts.len()).rev() {
            if self.exhausted {
                return;
            }
            if current.len() + colors[i] <= self.best_size {
                return;
            }
            let v = verts[i];
            let np = and_bits(&p, self.row(v));
            current.push(v);
            if is_empty(&np) {
                if current.len() > self.best_size {
                    self.best_size = current.len();
                    self.best = current.clone();
                }
            } else {
                self.expand(current, np);
            }
            current.pop();
            p[v / 64] &= !(1 << (v % 64));
        }
    }

    /// Does the candidate set contain a clique of size >= `need`?
    fn exists(&mut self, p: Vec<u64>, need: usize) -> bool {
        if need == 0 {
            return true;
        }
        if self.charge_node() {
            return false;
        }
        if popcount(&p) < need {
            return false;
        }
        let (verts, colors) = self.color(&p);
        let mut p = p;
        for i in (0..verts.len()).rev() {
            if self.exhausted {
                return false;
            }
            if colors[i] < need {
                return false;
            }
            let v = verts[i];
            let np = and_bits(&p, self.row(v));
            if self.exists(np, need - 1) {
                return true;
            }
            p[v / 64] &= !(1 << (v % 64));
        }
        false
    }
}

/// Exact maximum clique. With no budget the result is globally optimal,
/// and among all maximum cliques it is the lexicographically smallest
/// vertex set. With a budget, the best clique found so far is returned
/// with `optimal = false` once the node limit is hit.
pub fn max_clique(g: &BitGraph, budget: Option<u64>) -> CliqueResult {
    let n = g.n();
    if n == 0 {
        return CliqueResult {
            vertices: Vec::new(),
            size: 0,
            optimal: true,
            nodes_explored: 0,
        };
    }

    // static order: descending degree, ties by ascending index
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
    let mut pos_of = vec![0usize; n];
    for (pos, &v) in order.iter().enumerate() {
        pos_of[v] = pos;
    }

    let words = n.div_ceil(64);
    let mut adj = vec![0u64; n * words];
    for v in 0..n {
        let pv = pos_of[v];
        for u in g.neighbors(v) {
            let pu = pos_of[u];
            adj[pv * words + pu / 64] |= 1 << (pu % 64);
        }
    }

    let mut full = vec![0u64; words];
    for v in 0..n {
        full[v / 64] |= 1 << (v % 64);
    }

    let mut searcher = Searcher {
        words,
        adj,
        // any single vertex is a clique; seeding keeps budget-limited
        // results non-empty
        best: vec![0],
        best_size: 1,
        nodes: 0,
        budget,
        exhausted: false,
    };
    searcher.expand(&mut Vec::new(), full.clone());

    if !searcher.exhausted {
        // reconstruct the lexicographically smallest maximum clique
        let target = searcher.best_size;
        let mut prefix: Vec<usize> = Vec::with_capacity(target);
        let mut cand = full;
        for v in 0..n {
            if prefix.len() == target || searcher.exhausted {
                break;
            }
            let pv = pos_of[v];
            if cand[pv / 64] & (1 << (pv % 64)) == 0 {
                continue;
            }
            let next = and_bits(&cand, searcher.row(pv));
            if searcher.exists(next.clone(), target - prefix.len() - 1) {
                prefix.push(v);
                cand = next;
            }
        }
        if !searcher.exhausted && prefix.len() == target {
            return CliqueResult {
                size: prefix.len(),
                vertices: prefix,
                optimal: true,
                nodes_explored: searcher.nodes,
            };
        }
    }

    let mut vertices: Vec<usize> = searcher.best.iter().map(|&p| order[p]).collect();
    vertices.sort_unstable();
    CliqueResult {
        size: vertices.len(),
        vertices,
        optimal: false,
        nodes_explored: searcher.nodes,
    }
}

/// Exhaustive subset enumeration with the same tie-breaking contract as
/// [`max_clique`]. Guarded to small graphs; `nodes_explored` counts the
/// examined subsets.
pub fn brute_force_max_clique(g: &BitGraph) -> Result<CliqueResult, CliqueError> {
    let n = g.n();
    if n > BRUTE_FORCE_MAX_VERTICES {
        return Err(CliqueError::GraphTooLarge {
            n,
            max: BRUTE_FORCE_MAX_VERTICES,
        });
    }
    if n == 0 {
        return Ok(CliqueResult {
            vertices: Vec::new(),
            size: 0,
            optimal: true,
            nodes_explored: 0,
        });
    }
    let rows: Vec<u32> = (0..n)
        .map(|v| g.neighbors(v).iter().fold(0u32, |mask, &u| mask | 1 << u))
        .collect();

    let total: usize = 1 << n;
    // is_clique[s], bit-packed over subset masks
    let mut is_clique = vec![0u64; total.div_ceil(64)];
    is_clique[0] |= 1; // empty set
    let mut best_mask: u32 = 0;
    let mut best_size: usize = 0;
    for s in 1..total {
        let low = s.trailing_zeros() as usize;
        let rest = s & (s - 1);
        let rest_is_clique = is_clique[rest / 64] & (1 << (rest % 64)) != 0;
        if rest_is_clique && (rows[low] & rest as u32) == rest as u32 {
            is_clique[s / 64] |= 1 << (s % 64);
            let size = s.count_ones() as usize;
            if size > best_size || (size == best_size && lex_less(s as u32, best_mask)) {
                best_size = size;
                best_mask = s as u32;
            }
        }
    }
    let mut vertices = Vec::with_capacity(best_size);
    let mut m = best_mask;
    while m != 0 {
        vertices.push(m.trailing_zeros() as usize);
        m &= m - 1;
    }
    Ok(CliqueResult {
        size: best_size,
        vertices,
        optimal: true,
        nodes_explored: (total - 1) as u64,
    })
}

/// `a < b` when read as ascending index sequences.
fn lex_less(mut a: u32, mut b: u32) -> bool {
    while a != 0 && b != 0 {
        let la = a.trailing_zeros();
        let lb = b.trailing_zeros();
        if la != lb {
            return la < lb;
        }
        a &= a - 1;
        b &= b - 1;
    }
    b != 0
}

fn and_bits(a: &[u64], b: &[u64]) -> Vec<u64> {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn is_empty(bits: &[u64]) -> bool {
    bits.iter().all(|&w| w == 0)
}

fn popcount(bits: &[u64]) -> usize {
    bits.iter().map(|w| w.count_ones() as usize).sum()
}

fn iter_bits(bits: &[u64]) -> impl Iterator<Item = usize> + '_ {
    bits.iter().enumerate().flat_map(|(wi, &w)| {
        let mut word = w;
        std::iter::from_fn(move || {
            if word == 0 {
                return None;
            }
            let b = word.trailing_zeros() as usize;
            word &= word - 1;
            Some(wi * 64 + b)
        })
    })
}
