use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::graph;
use crate::math::exp;
use crate::{Error, Result};

/// Largest number of colors; allowed-color sets are packed into a `u64`.
pub const MAX_COLORS: usize = 64;

/// An undirected graph without self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleGraph {
    adj: Vec<Vec<usize>>,
}

impl SimpleGraph {
    /// Builds from an edge list; duplicate edges are merged.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            let bad = if u >= n { Some(u) } else if v >= n { Some(v) } else { None };
            if let Some(index) = bad {
                return Err(Error::IndexOutOfRange { index, size: n });
            }
            if u == v {
                return Err(Error::InvalidParams(format!("self-loop at vertex {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        for nb in adj.iter_mut() {
            nb.sort_unstable();
            nb.dedup();
        }
        Ok(Self { adj })
    }

    pub fn empty(n: usize) -> Self {
        Self { adj: vec![Vec::new(); n] }
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adj
    }

    pub fn max_degree(&self) -> usize {
        graph::max_degree(&self.adj)
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::with_capacity(self.num_edges());
        for (u, nb) in self.adj.iter().enumerate() {
            out.extend(nb.iter().filter(|&&v| v > u).map(|&v| (u, v)));
        }
        out
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// Connected components as sorted vertex lists.
    pub fn components(&self) -> Vec<Vec<usize>> {
        graph::connected_components(&self.adj)
    }

    /// The subgraph induced on `vertices`, relabelled `0..len`.
    pub fn induced(&self, vertices: &[usize]) -> SimpleGraph {
        let mut local = vec![usize::MAX; self.adj.len()];
        for (a, &v) in vertices.iter().enumerate() {
            local[v] = a;
        }
        let adj = vertices
            .iter()
            .map(|&v| {
                let mut nb: Vec<usize> =
                    self.adj[v].iter().filter(|&&w| local[w] != usize::MAX).map(|&w| local[w]).collect();
                nb.sort_unstable();
                nb
            })
            .collect();
        SimpleGraph { adj }
    }
}

/// The constraint graph `H` on colors `0..q`: adjacent vertices of `G` must
/// receive colors adjacent in `H`. Self-loops are allowed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintGraph {
    q: usize,
    /// `rows[a]` has bit `b` set iff `(a, b)` is an edge of `H`.
    rows: Vec<u64>,
}

impl ConstraintGraph {
    pub fn new(q: usize, edges: &[(usize, usize)], self_loops: &[usize]) -> Result<Self> {
        if !(2..=MAX_COLORS).contains(&q) {
            return Err(Error::InvalidParams(format!("need 2 <= q <= {MAX_COLORS}, got {q}")));
        }
        let mut rows = vec![0u64; q];
        let loops = self_loops.iter().map(|&c| (c, c));
        for (a, b) in edges.iter().copied().chain(loops) {
            if a >= q || b >= q {
                return Err(Error::IndexOutOfRange { index: a.max(b), size: q });
            }
            rows[a] |= 1 << b;
            rows[b] |= 1 << a;
        }
        Ok(Self { q, rows })
    }

    /// `K_q`: proper `q`-colorings.
    pub fn complete(q: usize) -> Result<Self> {
        let edges: Vec<(usize, usize)> = (0..q).flat_map(|a| (a + 1..q).map(move |b| (a, b))).collect();
        Self::new(q, &edges, &[])
    }

    /// Every pair allowed, including equal colors.
    pub fn full(q: usize) -> Result<Self> {
        let mut h = Self::complete(q)?;
        for c in 0..q {
            h.rows[c] |= 1 << c;
        }
        Ok(h)
    }

    pub fn q(&self) -> usize {
        self.q
    }

    #[inline]
    pub fn allows(&self, a: usize, b: usize) -> bool {
        (self.rows[a] >> b) & 1 == 1
    }

    /// Bit mask of colors compatible with `a`.
    #[inline]
    pub fn row(&self, a: usize) -> u64 {
        self.rows[a]
    }

    /// Mask with all `q` colors.
    #[inline]
    pub fn all_colors(&self) -> u64 {
        if self.q == 64 {
            u64::MAX
        } else {
            (1u64 << self.q) - 1
        }
    }

    /// Whether color `c` is compatible with every color, itself included.
    pub fn is_unconstrained(&self, c: usize) -> bool {
        self.rows[c] == self.all_colors()
    }

    /// Edges `(a, b)` with `a < b`, and self-loops, as separate lists.
    pub fn edge_lists(&self) -> (Vec<(usize, usize)>, Vec<usize>) {
        let mut edges = Vec::new();
        let mut loops = Vec::new();
        for a in 0..self.q {
            if self.allows(a, a) {
                loops.push(a);
            }
            for b in a + 1..self.q {
                if self.allows(a, b) {
                    edges.push((a, b));
                }
            }
        }
        (edges, loops)
    }

    /// `H` with every pair involving `c` allowed.
    pub fn with_unconstrained(&self, c: usize) -> Result<Self> {
        if c >= self.q {
            return Err(Error::IndexOutOfRange { index: c, size: self.q });
        }
        let mut h = self.clone();
        h.rows[c] = self.all_colors();
        for a in 0..self.q {
            h.rows[a] |= 1 << c;
        }
        Ok(h)
    }
}

/// A vertex coloring with colors `0..q`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(transparent))]
pub struct Coloring {
    colors: Vec<usize>,
}

impl Coloring {
    pub fn new(colors: Vec<usize>) -> Self {
        Self { colors }
    }

    pub fn len(&self) -> usize {
        self.colors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.colors.is_empty()
    }

    #[inline]
    pub fn get(&self, v: usize) -> usize {
        self.colors[v]
    }

    pub fn set(&mut self, v: usize, c: usize) {
        self.colors[v] = c;
    }

    pub fn colors(&self) -> &[usize] {
        &self.colors
    }

    /// Base-`q` packing with vertex 0 as the least significant digit.
    pub fn to_code(&self, q: usize) -> u64 {
        self.colors.iter().rev().fold(0u64, |acc, &c| acc * q as u64 + c as u64)
    }

    pub fn from_code(mut code: u64, n: usize, q: usize) -> Self {
        let mut colors = Vec::with_capacity(n);
        for _ in 0..n {
            colors.push((code % q as u64) as usize);
            code /= q as u64;
        }
        Self { colors }
    }
}

/// `c_r(σ)` for every color `r < q`.
pub fn color_counts(sigma: &Coloring, q: usize) -> Vec<usize> {
    let mut counts = vec![0; q];
    for &c in sigma.colors() {
        counts[c] += 1;
    }
    counts
}

/// Color weights `β`, stored with the reference (last) color pinned at 0.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BetaVector {
    values: Vec<f64>,
}

impl BetaVector {
    /// From the `q − 1` free coordinates.
    pub fn from_free(free: &[f64]) -> Self {
        let mut values = free.to_vec();
        values.push(0.0);
        Self { values }
    }

    /// From all `q` coordinates; shifted so that the last one is 0, which
    /// leaves the distribution unchanged.
    pub fn from_full(full: &[f64]) -> Result<Self> {
        let last = *full
            .last()
            .ok_or_else(|| Error::InvalidParams("beta vector must be nonempty".into()))?;
        Ok(Self { values: full.iter().map(|b| b - last).collect() })
    }

    pub fn zeros(q: usize) -> Self {
        Self { values: vec![0.0; q] }
    }

    pub fn q(&self) -> usize {
        self.values.len()
    }

    /// All `q` coordinates; the last is 0.
    pub fn full(&self) -> &[f64] {
        &self.values
    }

    pub fn free(&self) -> &[f64] {
        &self.values[..self.values.len() - 1]
    }

    pub fn get(&self, r: usize) -> f64 {
        self.values[r]
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|b| b.abs()).sum()
    }

    /// `e^{β_r}` for every color.
    pub fn exp_weights(&self) -> Vec<f64> {
        self.values.iter().map(|&b| exp(b)).collect()
    }

    /// Smallest probability of the softmax of `β`.
    pub fn min_softmax(&self) -> f64 {
        let w = self.exp_weights();
        let total: f64 = w.iter().sum();
        w.iter().copied().fold(f64::INFINITY, f64::min) / total
    }

    pub(crate) fn check(&self, q: usize) -> Result<()> {
        if self.values.len() != q {
            return Err(Error::LengthMismatch { expected: q, found: self.values.len() });
        }
        for &b in &self.values {
            crate::math::check_beta(b)?;
        }
        Ok(())
    }
}
