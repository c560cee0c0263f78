//! Adjacency-list utilities shared by the SAT interaction graph and the
//! colored graphs.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

/// Connected components as sorted vertex lists, ordered by smallest vertex.
pub fn connected_components(adj: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = adj.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(v) = queue.pop_front() {
            comp.push(v);
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    queue.push_back(w);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// A set of vertices whose closed neighborhoods are pairwise disjoint.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IndependentFamily {
    /// Members in the order they were selected.
    pub members: Vec<usize>,
    /// Open neighborhood of each member, aligned with `members`.
    pub neighborhoods: Vec<Vec<usize>>,
}

impl IndependentFamily {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Checks that the closed neighborhoods `{v} ∪ N(v)` of distinct members
    /// do not intersect.
    pub fn has_disjoint_neighborhoods(&self, num_vertices: usize) -> bool {
        let mut owner = vec![usize::MAX; num_vertices];
        for (slot, (&v, nb)) in self.members.iter().zip(&self.neighborhoods).enumerate() {
            for &w in core::iter::once(&v).chain(nb.iter()) {
                if owner[w] != usize::MAX && owner[w] != slot {
                    return false;
                }
                owner[w] = slot;
            }
        }
        true
    }
}

/// Greedy 2-hop independent set: scan vertices in ascending order, keep a
/// vertex if it is still available, then remove everything within distance
/// two of it.
pub fn two_hop_independent_set(adj: &[Vec<usize>]) -> IndependentFamily {
    let n = adj.len();
    let mut blocked = vec![false; n];
    let mut members = Vec::new();
    let mut neighborhoods = Vec::new();
    for v in 0..n {
        if blocked[v] {
            continue;
        }
        members.push(v);
        neighborhoods.push(adj[v].clone());
        blocked[v] = true;
        for &w in &adj[v] {
            blocked[w] = true;
            for &x in &adj[w] {
                blocked[x] = true;
            }
        }
    }
    IndependentFamily { members, neighborhoods }
}

/// Maximum vertex degree.
pub fn max_degree(adj: &[Vec<usize>]) -> usize {
    adj.iter().map(Vec::len).max().unwrap_or(0)
}
