use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use super::types::{BetaVector, Coloring, ConstraintGraph, SimpleGraph};
use crate::{seeded_rng, Error, ExactDistribution, Result, DEFAULT_MAX_ENUM_STATES};

pub(crate) fn check_sizes(g: &SimpleGraph, h: &ConstraintGraph, sigma: &Coloring) -> Result<()> {
    if sigma.len() != g.num_vertices() {
        return Err(Error::LengthMismatch { expected: g.num_vertices(), found: sigma.len() });
    }
    if let Some(&c) = sigma.colors().iter().find(|&&c| c >= h.q()) {
        return Err(Error::IndexOutOfRange { index: c, size: h.q() });
    }
    Ok(())
}

/// Whether every edge of `G` maps to an edge of `H`.
pub fn is_valid_coloring(g: &SimpleGraph, h: &ConstraintGraph, sigma: &Coloring) -> Result<bool> {
    check_sizes(g, h, sigma)?;
    Ok(g.edges().iter().all(|&(u, v)| h.allows(sigma.get(u), sigma.get(v))))
}

pub(crate) fn require_valid(g: &SimpleGraph, h: &ConstraintGraph, sigma: &Coloring) -> Result<()> {
    if is_valid_coloring(g, h, sigma)? {
        Ok(())
    } else {
        Err(Error::InvalidColoring)
    }
}

/// Mask of colors `s` such that recoloring `v` to `s` keeps `σ` valid.
#[inline]
pub(crate) fn q_mask(g: &SimpleGraph, h: &ConstraintGraph, sigma: &Coloring, v: usize) -> u64 {
    g.neighbors(v).iter().fold(h.all_colors(), |m, &w| m & h.row(sigma.get(w)))
}

/// Row `Q_σ(v, ·)`: entry `s` is true iff `v` can be recolored to `s`.
pub fn q_matrix(g: &SimpleGraph, h: &ConstraintGraph, sigma: &Coloring, v: usize) -> Result<Vec<bool>> {
    require_valid(g, h, sigma)?;
    if v >= g.num_vertices() {
        return Err(Error::IndexOutOfRange { index: v, size: g.num_vertices() });
    }
    let m = q_mask(g, h, sigma, v);
    Ok((0..h.q()).map(|s| (m >> s) & 1 == 1).collect())
}

fn check_packing(n: usize, q: usize) -> Result<()> {
    let bits = libm::log2(q as f64) * n as f64;
    if bits >= 64.0 {
        return Err(Error::TooLarge { size: (q as u128).saturating_pow(n as u32), cap: u64::MAX as u128 });
    }
    Ok(())
}

/// Calls `visit(code, colors)` for each valid coloring, stopping with
/// `TooLarge` once more than `max_states` have been found.
pub fn for_each_valid_coloring<V: FnMut(u64, &[usize])>(
    g: &SimpleGraph,
    h: &ConstraintGraph,
    max_states: usize,
    mut visit: V,
) -> Result<()> {
    let n = g.num_vertices();
    let q = h.q();
    check_packing(n, q)?;
    let mut powers = vec![1u64; n + 1];
    for v in 0..n {
        powers[v + 1] = powers[v].wrapping_mul(q as u64);
    }
    // neighbors already colored when `v` is reached
    let earlier: Vec<Vec<usize>> =
        (0..n).map(|v| g.neighbors(v).iter().copied().filter(|&w| w < v).collect()).collect();
    let mut colors = vec![0usize; n];
    let mut found = 0usize;
    if n == 0 {
        visit(0, &colors);
        return Ok(());
    }

    struct Ctx<'a, V> {
        h: &'a ConstraintGraph,
        earlier: &'a [Vec<usize>],
        powers: &'a [u64],
        max_states: usize,
        visit: V,
    }

    fn descend<V: FnMut(u64, &[usize])>(
        ctx: &mut Ctx<'_, V>,
        v: usize,
        code: u64,
        colors: &mut [usize],
        found: &mut usize,
    ) -> Result<()> {
        let n = colors.len();
        let allowed = ctx.earlier[v].iter().fold(ctx.h.all_colors(), |m, &w| m & ctx.h.row(colors[w]));
        for c in 0..ctx.h.q() {
            if (allowed >> c) & 1 == 0 {
                continue;
            }
            colors[v] = c;
            let next = code + c as u64 * ctx.powers[v];
            if v + 1 == n {
                *found += 1;
                if *found > ctx.max_states {
                    return Err(Error::TooLarge { size: *found as u128, cap: ctx.max_states as u128 });
                }
                (ctx.visit)(next, colors);
            } else {
                descend(ctx, v + 1, next, colors, found)?;
            }
        }
        Ok(())
    }

    let mut ctx = Ctx { h, earlier: &earlier, powers: &powers, max_states, visit: &mut visit };
    descend(&mut ctx, 0, 0, &mut colors, &mut found)
}

/// Exact law `Pr[σ] ∝ exp(Σ_r β_r c_r(σ))` over valid colorings.
pub fn enumerate_distribution(g: &SimpleGraph, h: &ConstraintGraph, beta: &BetaVector) -> Result<ExactDistribution> {
    enumerate_distribution_capped(g, h, beta, DEFAULT_MAX_ENUM_STATES)
}

pub fn enumerate_distribution_capped(
    g: &SimpleGraph,
    h: &ConstraintGraph,
    beta: &BetaVector,
    max_states: usize,
) -> Result<ExactDistribution> {
    beta.check(h.q())?;
    let b = beta.full();
    let mut states = Vec::new();
    for_each_valid_coloring(g, h, max_states, |code, colors| {
        states.push((code, colors.iter().map(|&c| b[c]).sum::<f64>()));
    })?;
    ExactDistribution::from_log_weights(states)
}

/// Exact sampler through the connected components of `G`.
#[derive(Debug, Clone)]
pub struct ColoringProductSampler {
    n: usize,
    q: usize,
    parts: Vec<(Vec<usize>, ExactDistribution)>,
}

impl ColoringProductSampler {
    pub fn new(g: &SimpleGraph, h: &ConstraintGraph, beta: &BetaVector) -> Result<Self> {
        Self::with_cap(g, h, beta, DEFAULT_MAX_ENUM_STATES)
    }

    pub fn with_cap(g: &SimpleGraph, h: &ConstraintGraph, beta: &BetaVector, max_states: usize) -> Result<Self> {
        beta.check(h.q())?;
        let mut parts = Vec::new();
        for comp in g.components() {
            let sub = g.induced(&comp);
            let dist = enumerate_distribution_capped(&sub, h, beta, max_states).map_err(|e| match e {
                Error::TooLarge { .. } => Error::ComponentTooLarge { size: comp.len(), cap: max_states },
                other => other,
            })?;
            parts.push((comp, dist));
        }
        Ok(Self { n: g.num_vertices(), q: h.q(), parts })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Coloring {
        let mut out = Coloring::new(vec![0; self.n]);
        for (vertices, dist) in &self.parts {
            let local = Coloring::from_code(dist.sample_code(rng), vertices.len(), self.q);
            for (a, &v) in vertices.iter().enumerate() {
                out.set(v, local.get(a));
            }
        }
        out
    }
}

/// One exact draw, deterministic in `seed`.
pub fn sample_exact(g: &SimpleGraph, h: &ConstraintGraph, beta: &BetaVector, seed: u64) -> Result<Coloring> {
    Ok(ColoringProductSampler::new(g, h, beta)?.sample(&mut seeded_rng(seed)))
}

/// Weights `e^{β_s}` restricted to the colors in `mask`.
#[inline]
pub(crate) fn masked_weights(weights: &[f64], mask: u64, out: &mut [f64]) -> f64 {
    let mut total = 0.0;
    for (s, o) in out.iter_mut().enumerate() {
        *o = if (mask >> s) & 1 == 1 { weights[s] } else { 0.0 };
        total += *o;
    }
    total
}

/// One heat-bath update at a uniform vertex, resampling from `θ_σ(v, ·)`.
pub fn glauber_step<R: Rng + ?Sized>(
    g: &SimpleGraph,
    h: &ConstraintGraph,
    weights: &[f64],
    sigma: &mut Coloring,
    scratch: &mut [f64],
    rng: &mut R,
) {
    let n = g.num_vertices();
    if n == 0 {
        return;
    }
    let v = rng.gen_range(0..n);
    let total = masked_weights(weights, q_mask(g, h, sigma, v), scratch);
    let mut u = rng.gen::<f64>() * total;
    let mut pick = sigma.get(v);
    for (s, &w) in scratch.iter().enumerate() {
        if w > 0.0 {
            pick = s;
            if u < w {
                break;
            }
            u -= w;
        }
    }
    sigma.set(v, pick);
}

/// Runs `steps` heat-bath updates from a valid `start`.
pub fn sample_glauber(
    g: &SimpleGraph,
    h: &ConstraintGraph,
    beta: &BetaVector,
    start: &Coloring,
    steps: u64,
    seed: u64,
) -> Result<Coloring> {
    beta.check(h.q())?;
    require_valid(g, h, start)?;
    let weights = beta.exp_weights();
    let mut scratch = vec![0.0; h.q()];
    let mut rng = seeded_rng(seed);
    let mut sigma = start.clone();
    for _ in 0..steps {
        glauber_step(g, h, &weights, &mut sigma, &mut scratch, &mut rng);
    }
    Ok(sigma)
}

/// One-step transition law of the heat-bath chain from `sigma` as
/// `(code, probability)` pairs; codes may repeat.
pub fn glauber_transitions(
    g: &SimpleGraph,
    h: &ConstraintGraph,
    beta: &BetaVector,
    sigma: &Coloring,
) -> Result<Vec<(u64, f64)>> {
    beta.check(h.q())?;
    require_valid(g, h, sigma)?;
    let n = g.num_vertices();
    let q = h.q();
    check_packing(n, q)?;
    let code = sigma.to_code(q);
    if n == 0 {
        return Ok(vec![(code, 1.0)]);
    }
    let weights = beta.exp_weights();
    let mut scratch = vec![0.0; q];
    let mut out = Vec::new();
    let mut place = 1u64;
    for v in 0..n {
        let total = masked_weights(&weights, q_mask(g, h, sigma, v), &mut scratch);
        let base = code - sigma.get(v) as u64 * place;
        for (s, &w) in scratch.iter().enumerate() {
            if w > 0.0 {
                out.push((base + s as u64 * place, w / total / n as f64));
            }
        }
        place *= q as u64;
    }
    Ok(out)
}

const START_SEARCH_BUDGET: u64 = 1_000_000;

/// A valid coloring found by randomized backtracking: vertices in random
/// order, colors tried in random order.
pub fn find_valid_coloring(g: &SimpleGraph, h: &ConstraintGraph, seed: u64) -> Result<Coloring> {
    let n = g.num_vertices();
    let q = h.q();
    let mut rng = seeded_rng(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let mut colors = vec![usize::MAX; n];
    let mut choices: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut depth = 0usize;
    let mut work = 0u64;
    let mut fresh = true;
    while depth < n {
        work += 1;
        if work > START_SEARCH_BUDGET {
            return Err(Error::GenerationBudgetExceeded { attempts: START_SEARCH_BUDGET });
        }
        let v = order[depth];
        if fresh {
            let allowed = g
                .neighbors(v)
                .iter()
                .filter(|&&w| colors[w] != usize::MAX)
                .fold(h.all_colors(), |m, &w| m & h.row(colors[w]));
            let mut options: Vec<usize> = (0..q).filter(|&s| (allowed >> s) & 1 == 1).collect();
            options.shuffle(&mut rng);
            choices[depth] = options;
        }
        match choices[depth].pop() {
            Some(c) => {
                colors[v] = c;
                depth += 1;
                fresh = true;
            }
            None => {
                colors[v] = usize::MAX;
                if depth == 0 {
                    return Err(Error::EmptySupport);
                }
                depth -= 1;
                colors[order[depth]] = usize::MAX;
                fresh = false;
            }
        }
    }
    Ok(Coloring::new(colors))
}
