//! Coloring instances: the star, even cycle and clique-union families, permissive
//! constraint graphs, and exact checks of the recoloring lower bounds.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::exact::for_each_valid_coloring;
use super::types::{BetaVector, ConstraintGraph, SimpleGraph};
use crate::chain::{conditional_chain, ChainStep};
use crate::graph::IndependentFamily;
use crate::math::{exp, ln, LogSumExp};
use crate::{seeded_rng, Error, Result, DEFAULT_MAX_ENUM_STATES};

/// A star with `leaves` leaves (center 0) and `H` on `q + 1` colors whose
/// only edges join color 0 to every other color. Valid colorings either give
/// the center color 0 and the leaves any other color, or the reverse.
pub fn star_instance(leaves: usize, q: usize) -> Result<(SimpleGraph, ConstraintGraph)> {
    if leaves == 0 || q == 0 {
        return Err(Error::InvalidParams(format!("need leaves >= 1 and q >= 1; got {leaves}, {q}")));
    }
    let edges: Vec<(usize, usize)> = (1..=leaves).map(|i| (0, i)).collect();
    let g = SimpleGraph::new(leaves + 1, &edges)?;
    let h_edges: Vec<(usize, usize)> = (1..=q).map(|c| (0, c)).collect();
    let h = ConstraintGraph::new(q + 1, &h_edges, &[])?;
    Ok((g, h))
}

/// The cycle on `2n` vertices with `H` on three colors and edges `{0,1}`,
/// `{0,2}`: color 0 alternates, so every valid coloring uses it exactly `n`
/// times.
pub fn cycle_instance(n: usize) -> Result<(SimpleGraph, ConstraintGraph)> {
    if n < 2 {
        return Err(Error::InvalidParams(format!("need n >= 2, got {n}")));
    }
    let m = 2 * n;
    let edges: Vec<(usize, usize)> = (0..m).map(|i| (i, (i + 1) % m)).collect();
    let g = SimpleGraph::new(m, &edges)?;
    let h = ConstraintGraph::new(3, &[(0, 1), (0, 2)], &[])?;
    Ok((g, h))
}

/// `n / q` disjoint copies of `K_q`, properly `q`-colored: every valid
/// coloring has exactly `n / q` vertices of each color.
pub fn cliques_instance(n: usize, q: usize) -> Result<(SimpleGraph, ConstraintGraph)> {
    if q < 2 || n == 0 || !n.is_multiple_of(q) {
        return Err(Error::InvalidParams(format!("need q >= 2 dividing n > 0; got n={n}, q={q}")));
    }
    let mut edges = Vec::new();
    for block in 0..n / q {
        let base = block * q;
        for a in 0..q {
            for b in a + 1..q {
                edges.push((base + a, base + b));
            }
        }
    }
    Ok((SimpleGraph::new(n, &edges)?, ConstraintGraph::complete(q)?))
}

/// `K_q` with color `c` made compatible with everything, itself included.
pub fn permissive_instance(q: usize, c: usize) -> Result<ConstraintGraph> {
    ConstraintGraph::complete(q)?.with_unconstrained(c)
}

/// A random constraint graph on `q` colors (each pair and loop present with
/// probability 1/2) with color `c` unconstrained.
pub fn gen_random_permissive(q: usize, c: usize, seed: u64) -> Result<ConstraintGraph> {
    let mut rng = seeded_rng(seed);
    let mut edges = Vec::new();
    let mut loops = Vec::new();
    for a in 0..q {
        if rng.gen::<bool>() {
            loops.push(a);
        }
        for b in a + 1..q {
            if rng.gen::<bool>() {
                edges.push((a, b));
            }
        }
    }
    ConstraintGraph::new(q, &edges, &loops)?.with_unconstrained(c)
}

/// Relative slack for comparing an exact probability with its lower bound.
pub const BOUND_RTOL: f64 = 1e-12;

/// Exact conditional probability of an unconstrained color, with the bound
/// it must respect.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UnconstrainedCheck {
    pub probability: f64,
    /// `e^{β_j} / Σ_s e^{β_s}`.
    pub bound: f64,
    pub holds: bool,
}

/// `Pr[σ_w = j | σ_u = x_u for (u, x_u) in conditioning]` by enumeration.
/// Color `j` must be unconstrained in `H`.
pub fn verify_unconstrained_bound(
    g: &SimpleGraph,
    h: &ConstraintGraph,
    beta: &BetaVector,
    w: usize,
    j: usize,
    conditioning: &[(usize, usize)],
) -> Result<UnconstrainedCheck> {
    beta.check(h.q())?;
    let n = g.num_vertices();
    if w >= n {
        return Err(Error::IndexOutOfRange { index: w, size: n });
    }
    if j >= h.q() {
        return Err(Error::IndexOutOfRange { index: j, size: h.q() });
    }
    if !h.is_unconstrained(j) {
        return Err(Error::InvalidParams(format!("color {j} is not unconstrained")));
    }
    for &(u, x) in conditioning {
        if u >= n || x >= h.q() {
            return Err(Error::IndexOutOfRange { index: u.max(x), size: n.max(h.q()) });
        }
        if u == w {
            return Err(Error::InvalidParams("conditioning must not fix the target vertex".into()));
        }
    }
    let b = beta.full();
    let mut given = LogSumExp::new();
    let mut hit = LogSumExp::new();
    for_each_valid_coloring(g, h, DEFAULT_MAX_ENUM_STATES, |_, colors| {
        if conditioning.iter().all(|&(u, x)| colors[u] == x) {
            let lw: f64 = colors.iter().map(|&c| b[c]).sum();
            given.add(lw);
            if colors[w] == j {
                hit.add(lw);
            }
        }
    })?;
    if given.is_empty() {
        return Err(Error::InconsistentConditioning);
    }
    let probability = exp(hit.value() - given.value());
    let weights = beta.exp_weights();
    let bound = weights[j] / weights.iter().sum::<f64>();
    // the bound is attained when every color is allowed, so allow rounding
    let holds = probability >= bound * (1.0 - BOUND_RTOL);
    Ok(UnconstrainedCheck { probability, bound, holds })
}

/// Exact chain of recolorability conditionals for proper colorings.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ColoringCouplingCheck {
    pub steps: Vec<ChainStep>,
    /// Minimum conditional over all steps and attainable histories.
    pub min_conditional: f64,
    /// `1 / (1 + q^{d+1} e^{‖β‖₁ d})`.
    pub bound: f64,
    /// Whether `q ≥ d + 2`; the bound is only claimed then.
    pub precondition: bool,
    /// `Some(min_conditional >= bound)` when the precondition holds.
    pub holds: Option<bool>,
}

/// For proper `q`-colorings of `G`, computes `Pr[e_{v_k} = 1 | e_{v_1}, …,
/// e_{v_{k−1}}]` over every attainable history, where `e_v` says that `v`
/// can be recolored both to `r` and to the reference color `q − 1`.
pub fn verify_coloring_coupling(
    g: &SimpleGraph,
    beta: &BetaVector,
    family: &[usize],
    r: usize,
) -> Result<ColoringCouplingCheck> {
    let q = beta.q();
    let h = ConstraintGraph::complete(q)?;
    beta.check(q)?;
    if r + 1 >= q {
        return Err(Error::InvalidParams(format!("r must be a free color below {}, got {r}", q - 1)));
    }
    let n = g.num_vertices();
    if family.len() > 63 {
        return Err(Error::TooLarge { size: family.len() as u128, cap: 63 });
    }
    if let Some(&bad) = family.iter().find(|&&v| v >= n) {
        return Err(Error::IndexOutOfRange { index: bad, size: n });
    }
    let fam = IndependentFamily {
        members: family.to_vec(),
        neighborhoods: family.iter().map(|&v| g.neighbors(v).to_vec()).collect(),
    };
    if !fam.has_disjoint_neighborhoods(n) {
        return Err(Error::InvalidParams("family members must have disjoint neighborhoods".into()));
    }
    let b = beta.full();
    let both = (1u64 << r) | (1u64 << (q - 1));
    let mut law: alloc::collections::BTreeMap<u64, LogSumExp> = alloc::collections::BTreeMap::new();
    let mut total = LogSumExp::new();
    for_each_valid_coloring(g, &h, DEFAULT_MAX_ENUM_STATES, |_, colors| {
        let lw: f64 = colors.iter().map(|&c| b[c]).sum();
        total.add(lw);
        let mut mask = 0u64;
        for (t, &v) in family.iter().enumerate() {
            let allowed = g.neighbors(v).iter().fold(h.all_colors(), |m, &u| m & h.row(colors[u]));
            if allowed & both == both {
                mask |= 1 << t;
            }
        }
        law.entry(mask).or_default().add(lw);
    })?;
    if total.is_empty() {
        return Err(Error::EmptySupport);
    }
    let z = total.value();
    let law: Vec<(u64, f64)> = law.iter().map(|(&m, acc)| (m, exp(acc.value() - z))).collect();
    let steps = conditional_chain(&law, family);
    let min_conditional = steps.iter().map(|s| s.min_conditional).fold(f64::INFINITY, f64::min);
    let d = g.max_degree();
    let log_tail = (d + 1) as f64 * ln(q as f64) + beta.l1_norm() * d as f64;
    let bound = 1.0 / (1.0 + exp(log_tail));
    let precondition = q >= d + 2;
    let holds = precondition.then_some(min_conditional >= bound * (1.0 - BOUND_RTOL));
    Ok(ColoringCouplingCheck { steps, min_conditional, bound, precondition, holds })
}

/// A random graph with maximum degree `d`. Edges are proposed between
/// uniformly drawn unsaturated vertices; once proposals keep failing, the
/// remaining valid pairs are listed and drawn from directly until none is
/// left, so the result is maximal.
pub fn gen_random_graph(n: usize, d: usize, seed: u64) -> Result<SimpleGraph> {
    let mut rng = seeded_rng(seed);
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    if d == 0 || n < 2 {
        return Ok(SimpleGraph::empty(n));
    }
    let mut open: Vec<usize> = (0..n).collect();
    let mut failures = 0usize;
    while open.len() >= 2 && failures < 64 {
        let u = open[rng.gen_range(0..open.len())];
        let v = open[rng.gen_range(0..open.len())];
        if u == v || adj[u].contains(&v) {
            failures += 1;
            continue;
        }
        failures = 0;
        adj[u].push(v);
        adj[v].push(u);
        open.retain(|&x| adj[x].len() < d);
    }
    let mut pairs: Vec<(usize, usize)> = Vec::new();
    for (a, &u) in open.iter().enumerate() {
        for &v in &open[a + 1..] {
            if !adj[u].contains(&v) {
                pairs.push((u, v));
            }
        }
    }
    while !pairs.is_empty() {
        let (u, v) = pairs.swap_remove(rng.gen_range(0..pairs.len()));
        adj[u].push(v);
        adj[v].push(u);
        pairs.retain(|&(a, b)| adj[a].len() < d && adj[b].len() < d);
    }
    let edges: Vec<(usize, usize)> =
        adj.iter().enumerate().flat_map(|(u, nb)| nb.iter().filter(move |&&v| v > u).map(move |&v| (u, v))).collect();
    SimpleGraph::new(n, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring::{color_counts, enumerate_distribution, is_valid_coloring, Coloring};

    #[test]
    fn star_colorings_split_into_two_families() {
        let (g, h) = star_instance(4, 3).unwrap();
        assert!(is_valid_coloring(&g, &h, &Coloring::new(vec![0, 1, 2, 3, 1])).unwrap());
        let d = enumerate_distribution(&g, &h, &BetaVector::zeros(4)).unwrap();
        assert_eq!(d.len(), 81 + 3);
        for &code in d.codes() {
            let s = Coloring::from_code(code, 5, 4);
            let center_zero = s.get(0) == 0;
            assert!((1..5).all(|i| (s.get(i) == 0) != center_zero));
        }
    }

    #[test]
    fn cycle_uses_color_zero_exactly_n_times() {
        let (g, h) = cycle_instance(4).unwrap();
        let d = enumerate_distribution(&g, &h, &BetaVector::zeros(3)).unwrap();
        for &code in d.codes() {
            assert_eq!(color_counts(&Coloring::from_code(code, 8, 3), 3)[0], 4);
        }
    }

    #[test]
    fn cliques_have_balanced_counts() {
        let (g, h) = cliques_instance(6, 3).unwrap();
        let d = enumerate_distribution(&g, &h, &BetaVector::from_free(&[0.4, -1.0])).unwrap();
        assert_eq!(d.len(), 36);
        for &code in d.codes() {
            assert_eq!(color_counts(&Coloring::from_code(code, 6, 3), 3), vec![2, 2, 2]);
        }
        assert!(cliques_instance(7, 3).is_err());
    }

    #[test]
    fn unconstrained_bound_on_small_star() {
        let g = SimpleGraph::new(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        let h = permissive_instance(3, 2).unwrap();
        let check = verify_unconstrained_bound(&g, &h, &BetaVector::zeros(3), 0, 2, &[(1, 0), (2, 1)]).unwrap();
        assert!((check.bound - 1.0 / 3.0).abs() < 1e-15);
        assert!(check.holds);
    }

    #[test]
    fn fully_permissive_gives_softmax() {
        let g = SimpleGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let h = ConstraintGraph::full(3).unwrap();
        let beta = BetaVector::from_free(&[0.5, -0.25]);
        let check = verify_unconstrained_bound(&g, &h, &beta, 1, 0, &[(0, 2)]).unwrap();
        assert!((check.probability - check.bound).abs() < 1e-14);
    }

    #[test]
    fn inconsistent_conditioning() {
        let g = SimpleGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let h = permissive_instance(3, 2).unwrap();
        let err = verify_unconstrained_bound(&g, &h, &BetaVector::zeros(3), 2, 2, &[(0, 0), (1, 0)]).unwrap_err();
        assert_eq!(err, Error::InconsistentConditioning);
    }

    #[test]
    fn coupling_on_path() {
        let g = SimpleGraph::new(3, &[(0, 1), (1, 2)]).unwrap();
        let c = verify_coloring_coupling(&g, &BetaVector::zeros(4), &[0], 0).unwrap();
        assert!((c.bound - 1.0 / 65.0).abs() < 1e-15);
        assert_eq!(c.holds, Some(true));
        let e = verify_coloring_coupling(&SimpleGraph::empty(3), &BetaVector::zeros(3), &[0, 1, 2], 1).unwrap();
        assert_eq!(e.min_conditional, 1.0);
    }

    #[test]
    fn coupling_on_frozen_triangle() {
        let tri = SimpleGraph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let c = verify_coloring_coupling(&tri, &BetaVector::zeros(3), &[0], 0).unwrap();
        assert!(!c.precondition);
        assert_eq!(c.holds, None);
        assert_eq!(c.min_conditional, 0.0);
    }

    #[test]
    fn random_graph_degree_and_determinism() {
        let g = gen_random_graph(50, 3, 8).unwrap();
        assert!(g.max_degree() <= 3);
        assert_eq!(g, gen_random_graph(50, 3, 8).unwrap());
        assert_eq!(gen_random_graph(10, 0, 1).unwrap().num_edges(), 0);
    }
}
