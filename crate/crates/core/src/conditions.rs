//! Identifiability and sampling conditions for H-colorings: the rainbow
//! statistics, the site-influence matrix with the Dobrushin and
//! Dobrushin–Shlosman sums, and exact free energies and KL divergences.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::coloring::exact::{check_sizes, q_mask, require_valid};
use crate::coloring::{
    color_counts, enumerate_distribution, find_valid_coloring, sample_glauber, BetaVector, Coloring,
    ColoringProductSampler, ConstraintGraph, SimpleGraph,
};
use crate::math::{ln_1p, sqrt};
use crate::{derive_seed, seeded_rng, Error, Result};

/// Cap on the number of distinct neighborhood masks examined per pair.
pub const MAX_NEIGHBORHOOD_MASKS: usize = 1 << 16;

fn check_color(h: &ConstraintGraph, r: usize) -> Result<()> {
    if r >= h.q() {
        return Err(Error::IndexOutOfRange { index: r, size: h.q() });
    }
    Ok(())
}

/// `u_r(σ)`: vertices that can be recolored to `r` with the rest fixed.
pub fn rainbow_stat(g: &SimpleGraph, h: &ConstraintGraph, sigma: &Coloring, r: usize) -> Result<usize> {
    check_color(h, r)?;
    require_valid(g, h, sigma)?;
    Ok((0..g.num_vertices()).filter(|&v| (q_mask(g, h, sigma, v) >> r) & 1 == 1).count())
}

/// `u_{rq}(σ)`: vertices recolorable to both `r` and the reference color.
pub fn two_rainbow_stat(g: &SimpleGraph, h: &ConstraintGraph, sigma: &Coloring, r: usize) -> Result<usize> {
    check_color(h, r)?;
    require_valid(g, h, sigma)?;
    let both = (1u64 << r) | (1u64 << (h.q() - 1));
    Ok((0..g.num_vertices()).filter(|&v| q_mask(g, h, sigma, v) & both == both).count())
}

/// Dense `n × n` matrix of influences `R_{vw}` with cached row and column
/// sums. Entries vanish off the edges of `G`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InfluenceMatrix {
    n: usize,
    data: Vec<f64>,
    row_sums: Vec<f64>,
    col_sums: Vec<f64>,
}

impl InfluenceMatrix {
    /// From row-major entries; each must lie in `[0, 1]`.
    pub fn from_row_major(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::LengthMismatch { expected: n * n, found: data.len() });
        }
        if let Some(x) = data.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::InvalidParams(alloc::format!("influence {x} outside [0, 1]")));
        }
        let mut row_sums = vec![0.0; n];
        let mut col_sums = vec![0.0; n];
        for v in 0..n {
            for w in 0..n {
                row_sums[v] += data[v * n + w];
                col_sums[w] += data[v * n + w];
            }
        }
        Ok(Self { n, data, row_sums, col_sums })
    }

    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![0.0; n * n], row_sums: vec![0.0; n], col_sums: vec![0.0; n] }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, v: usize, w: usize) -> f64 {
        self.data[v * self.n + w]
    }

    pub fn as_row_major(&self) -> &[f64] {
        &self.data
    }

    /// `Σ_w R_{vw}` for every `v`.
    pub fn row_sums(&self) -> &[f64] {
        &self.row_sums
    }

    /// `Σ_v R_{vw}` for every `w`.
    pub fn col_sums(&self) -> &[f64] {
        &self.col_sums
    }
}

fn masked_softmax(weights: &[f64], mask: u64, out: &mut [f64]) {
    let mut total = 0.0;
    for (s, o) in out.iter_mut().enumerate() {
        *o = if (mask >> s) & 1 == 1 { weights[s] } else { 0.0 };
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

fn tv(p: &[f64], r: &[f64]) -> f64 {
    0.5 * p.iter().zip(r).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Masks of colors allowed at `v` by the neighbors other than `w`, over all
/// their color assignments.
fn reachable_masks(g: &SimpleGraph, h: &ConstraintGraph, v: usize, w: usize) -> Result<BTreeSet<u64>> {
    let mut masks = BTreeSet::new();
    masks.insert(h.all_colors());
    for &u in g.neighbors(v) {
        if u == w {
            continue;
        }
        let mut next = BTreeSet::new();
        for &m in &masks {
            for c in 0..h.q() {
                next.insert(m & h.row(c));
            }
        }
        // an empty mask stays empty and never yields an admissible pair
        next.remove(&0);
        if next.len() > MAX_NEIGHBORHOOD_MASKS {
            return Err(Error::TooLarge { size: next.len() as u128, cap: MAX_NEIGHBORHOOD_MASKS as u128 });
        }
        masks = next;
    }
    Ok(masks)
}

/// `R_{vw}`: the largest total variation between the conditional laws of
/// `σ_v` under two neighborhood assignments that differ only at `w`. An
/// assignment counts when it leaves at least one color available at `v`.
pub fn influence_matrix(g: &SimpleGraph, h: &ConstraintGraph, beta: &BetaVector) -> Result<InfluenceMatrix> {
    beta.check(h.q())?;
    let n = g.num_vertices();
    let q = h.q();
    let weights = beta.exp_weights();
    let mut data = vec![0.0; n * n];
    let mut p = vec![0.0; q];
    let mut r = vec![0.0; q];
    for v in 0..n {
        for &w in g.neighbors(v) {
            let mut best: f64 = 0.0;
            for m in reachable_masks(g, h, v, w)? {
                let admissible: Vec<u64> = (0..q).map(|c| m & h.row(c)).filter(|&x| x != 0).collect();
                for (i, &a) in admissible.iter().enumerate() {
                    masked_softmax(&weights, a, &mut p);
                    for &b in &admissible[i + 1..] {
                        if a != b {
                            masked_softmax(&weights, b, &mut r);
                            best = best.max(tv(&p, &r));
                        }
                    }
                }
            }
            data[v * n + w] = best.clamp(0.0, 1.0);
        }
    }
    InfluenceMatrix::from_row_major(n, data)
}

/// Dobrushin's condition: `α = max_v Σ_w R_{vw} < 1`.
pub fn check_dobrushin(m: &InfluenceMatrix) -> (bool, f64) {
    let alpha = m.row_sums().iter().copied().fold(0.0, f64::max);
    (alpha < 1.0, alpha)
}

/// Dobrushin–Shlosman condition: `α = max_w Σ_v R_{vw} < 1`.
pub fn check_ds(m: &InfluenceMatrix) -> (bool, f64) {
    let alpha = m.col_sums().iter().copied().fold(0.0, f64::max);
    (alpha < 1.0, alpha)
}

/// `F(β) = ln Σ_σ exp(Σ_r β_r c_r(σ))` by enumeration.
pub fn free_energy(g: &SimpleGraph, h: &ConstraintGraph, beta: &BetaVector) -> Result<f64> {
    Ok(enumerate_distribution(g, h, beta)?.log_partition())
}

/// `KL(P_β ‖ P_γ)` by summation over the enumerated support.
///
/// With `x(σ) = ⟨γ − β, c(σ)⟩` taken relative to its value at the most
/// likely state, `ln P_β(σ)/P_γ(σ) = ln E_β[e^x] − x(σ)`, so the divergence
/// is `ln E_β[e^x] − E_β[x]`; it is exactly zero when `x` is constant on the
/// support.
pub fn kl_exact(g: &SimpleGraph, h: &ConstraintGraph, beta: &BetaVector, gamma: &BetaVector) -> Result<f64> {
    gamma.check(h.q())?;
    let dist = enumerate_distribution(g, h, beta)?;
    let (n, q) = (g.num_vertices(), h.q());
    let diff: Vec<f64> = gamma.full().iter().zip(beta.full()).map(|(a, b)| a - b).collect();
    let stat = |code: u64| -> f64 {
        let counts = color_counts(&Coloring::from_code(code, n, q), q);
        counts.iter().zip(&diff).map(|(&c, d)| c as f64 * d).sum()
    };
    let mode = dist
        .iter()
        .fold((0u64, f64::NEG_INFINITY), |best, (c, p)| if p > best.1 { (c, p) } else { best })
        .0;
    let x0 = stat(mode);
    let mut mean_expm1 = 0.0;
    let mut mean_x = 0.0;
    for (code, p) in dist.iter() {
        let x = stat(code) - x0;
        mean_expm1 += p * libm::expm1(x);
        mean_x += p * x;
    }
    Ok((ln_1p(mean_expm1) - mean_x).max(0.0))
}

/// Where the samples of a condition check come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum SampleSource {
    /// Independent exact draws through the connected components.
    Exact,
    /// Independent heat-bath chains of `steps` updates, each started from a
    /// randomized valid coloring.
    Glauber { steps: u64 },
}

/// Per-color summary of a recolorability statistic, as fractions of `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ColorStat {
    pub color: usize,
    pub mean_fraction: f64,
    pub min_fraction: f64,
}

/// Monte Carlo frequency of `{u_{rq}(σ) ≥ δn for every free r}`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConditionReport {
    pub source: SampleSource,
    pub sample_count: usize,
    pub delta: f64,
    /// `δ n`.
    pub threshold: f64,
    pub event_frequency: f64,
    /// 95% Wilson score interval for the event probability.
    pub confidence_interval: (f64, f64),
    pub rainbow: Vec<ColorStat>,
    pub two_rainbow: Vec<ColorStat>,
    /// `None` when the influence matrix is too large to compute.
    pub dobrushin_alpha: Option<f64>,
    pub ds_alpha: Option<f64>,
}

/// 95% Wilson score interval for `successes` out of `trials`.
pub fn wilson_interval(successes: usize, trials: usize) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    const Z: f64 = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = successes as f64 / n;
    let z2 = Z * Z;
    let centre = (p + z2 / (2.0 * n)) / (1.0 + z2 / n);
    let half = Z * sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / (1.0 + z2 / n);
    let lo = if successes == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if successes == trials { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

struct Tally {
    sum: f64,
    min: f64,
}

fn summarize(tallies: &[Tally], samples: usize, n: usize) -> Vec<ColorStat> {
    let scale = if n == 0 { 1.0 } else { n as f64 };
    tallies
        .iter()
        .enumerate()
        .map(|(color, t)| ColorStat {
            color,
            mean_fraction: if samples == 0 { 0.0 } else { t.sum / samples as f64 / scale },
            min_fraction: if samples == 0 { 0.0 } else { t.min / scale },
        })
        .collect()
}

/// Draws `samples` colorings from `source` and reports how often every
/// two-rainbow count reaches `δn`, with the rainbow statistics of all colors.
pub fn estimate_condition_probability(
    g: &SimpleGraph,
    h: &ConstraintGraph,
    beta: &BetaVector,
    delta: f64,
    samples: usize,
    seed: u64,
    source: SampleSource,
) -> Result<ConditionReport> {
    beta.check(h.q())?;
    let n = g.num_vertices();
    let q = h.q();
    let threshold = delta * n as f64;
    let fresh = || (0..q).map(|_| Tally { sum: 0.0, min: f64::INFINITY }).collect::<Vec<_>>();
    let mut rainbow = fresh();
    let mut two = fresh();
    two.truncate(q - 1);
    let mut hits = 0usize;

    let exact = match source {
        SampleSource::Exact => Some(ColoringProductSampler::new(g, h, beta)?),
        SampleSource::Glauber { .. } => None,
    };
    let mut rng = seeded_rng(seed);
    let reference = 1u64 << (q - 1);
    for i in 0..samples {
        let sigma = match (&exact, source) {
            (Some(sampler), _) => sampler.sample(&mut rng),
            (None, SampleSource::Glauber { steps }) => {
                let s = derive_seed(seed, i as u64);
                let start = find_valid_coloring(g, h, s)?;
                sample_glauber(g, h, beta, &start, steps, derive_seed(s, 1))?
            }
            (None, SampleSource::Exact) => unreachable!("exact sampler built above"),
        };
        check_sizes(g, h, &sigma)?;
        let mut u = vec![0usize; q];
        let mut urq = vec![0usize; q - 1];
        for v in 0..n {
            let m = q_mask(g, h, &sigma, v);
            for r in 0..q {
                if (m >> r) & 1 == 1 {
                    u[r] += 1;
                    if r + 1 < q && m & reference != 0 {
                        urq[r] += 1;
                    }
                }
            }
        }
        for (t, &x) in rainbow.iter_mut().zip(&u) {
            t.sum += x as f64;
            t.min = t.min.min(x as f64);
        }
        for (t, &x) in two.iter_mut().zip(&urq) {
            t.sum += x as f64;
            t.min = t.min.min(x as f64);
        }
        if urq.iter().all(|&x| x as f64 >= threshold) {
            hits += 1;
        }
    }

    let alphas = influence_matrix(g, h, beta).ok().map(|m| (check_dobrushin(&m).1, check_ds(&m).1));
    Ok(ConditionReport {
        source,
        sample_count: samples,
        delta,
        threshold,
        event_frequency: if samples == 0 { 0.0 } else { hits as f64 / samples as f64 },
        confidence_interval: wilson_interval(hits, samples),
        rainbow: summarize(&rainbow, samples, n),
        two_rainbow: summarize(&two, samples, n),
        dobrushin_alpha: alphas.map(|a| a.0),
        ds_alpha: alphas.map(|a| a.1),
    })
}

/// `F(γ) − F(β) − ⟨γ − β, E_β[c]⟩`, the Bregman divergence of the free
/// energy, which equals `KL(P_β ‖ P_γ)`.
pub fn kl_bregman(g: &SimpleGraph, h: &ConstraintGraph, beta: &BetaVector, gamma: &BetaVector) -> Result<f64> {
    let dist = enumerate_distribution(g, h, beta)?;
    let f_gamma = free_energy(g, h, gamma)?;
    let (n, q) = (g.num_vertices(), h.q());
    let mut inner = 0.0;
    for r in 0..q {
        let mean = dist.expectation(|code| Coloring::from_code(code, n, q).colors().iter().filter(|&&c| c == r).count() as f64);
        inner += (gamma.get(r) - beta.get(r)) * mean;
    }
    Ok(f_gamma - dist.log_partition() - inner)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring::instances::{cliques_instance, cycle_instance, star_instance};
    use crate::math::ln;

    #[test]
    fn rainbow_counts_on_simple_graphs() {
        let h = ConstraintGraph::complete(3).unwrap();
        let empty = SimpleGraph::empty(4);
        let sigma = Coloring::new(vec![0, 1, 2, 0]);
        for r in 0..3 {
            assert_eq!(rainbow_stat(&empty, &h, &sigma, r).unwrap(), 4);
            assert_eq!(two_rainbow_stat(&empty, &h, &sigma, r).unwrap(), 4);
        }
        let tri = SimpleGraph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let proper = Coloring::new(vec![0, 1, 2]);
        for r in 0..2 {
            assert_eq!(two_rainbow_stat(&tri, &h, &proper, r).unwrap(), 0);
        }
        assert_eq!(rainbow_stat(&tri, &h, &Coloring::new(vec![0, 0, 1]), 0), Err(Error::InvalidColoring));
    }

    #[test]
    fn isolated_vertices_have_no_influence() {
        let g = SimpleGraph::empty(3);
        let h = ConstraintGraph::complete(3).unwrap();
        let m = influence_matrix(&g, &h, &BetaVector::zeros(3)).unwrap();
        assert_eq!(m, InfluenceMatrix::zeros(3));
        assert_eq!(check_dobrushin(&m), (true, 0.0));
        assert_eq!(check_ds(&m), (true, 0.0));
    }

    #[test]
    fn cycle_influences_vanish() {
        let (g, h) = cycle_instance(4).unwrap();
        let m = influence_matrix(&g, &h, &BetaVector::from_free(&[0.3, -0.2])).unwrap();
        assert!(m.as_row_major().iter().all(|&x| x == 0.0));
        assert_eq!(check_ds(&m), (true, 0.0));
    }

    #[test]
    fn star_influences() {
        let (g, h) = star_instance(3, 3).unwrap();
        let m = influence_matrix(&g, &h, &BetaVector::zeros(4)).unwrap();
        for leaf in 1..=3 {
            assert_eq!(m.get(0, leaf), 0.0);
            assert!((m.get(leaf, 0) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_vertex_kl() {
        let g = SimpleGraph::empty(1);
        let h = ConstraintGraph::complete(2).unwrap();
        let b = BetaVector::zeros(2);
        let c = BetaVector::from_free(&[ln(2.0)]);
        let expected = ln(1.5) - 0.5 * ln(2.0);
        assert!((expected - 0.0589).abs() < 1e-4);
        assert!((kl_exact(&g, &h, &b, &c).unwrap() - expected).abs() < 1e-14);
        assert!((kl_bregman(&g, &h, &b, &c).unwrap() - expected).abs() < 1e-14);
        assert_eq!(kl_exact(&g, &h, &b, &b).unwrap(), 0.0);
    }

    #[test]
    fn non_identifiable_families_have_zero_kl() {
        let (g, h) = cliques_instance(6, 3).unwrap();
        let b = BetaVector::from_free(&[0.4, -1.0]);
        let c = BetaVector::from_free(&[-0.7, 2.0]);
        assert_eq!(kl_exact(&g, &h, &b, &c).unwrap(), 0.0);
        let (g, h) = cycle_instance(3).unwrap();
        let b = BetaVector::from_free(&[0.1, 0.0]);
        let c = BetaVector::from_free(&[1.5, 0.0]);
        assert_eq!(kl_exact(&g, &h, &b, &c).unwrap(), 0.0);
    }

    #[test]
    fn condition_frequencies() {
        let h = ConstraintGraph::complete(3).unwrap();
        let empty = SimpleGraph::empty(5);
        let r = estimate_condition_probability(&empty, &h, &BetaVector::zeros(3), 1.0, 50, 1, SampleSource::Exact)
            .unwrap();
        assert_eq!(r.event_frequency, 1.0);
        let (g, h) = cliques_instance(6, 3).unwrap();
        for source in [SampleSource::Exact, SampleSource::Glauber { steps: 50 }] {
            let r = estimate_condition_probability(&g, &h, &BetaVector::zeros(3), 0.1, 40, 2, source).unwrap();
            assert_eq!(r.event_frequency, 0.0);
            assert_eq!(r.source, source);
            assert!(r.confidence_interval.1 < 0.1);
        }
    }

    #[test]
    fn wilson_bounds() {
        let (lo, hi) = wilson_interval(50, 100);
        assert!(lo < 0.5 && hi > 0.5 && (0.5 - lo - (hi - 0.5)).abs() < 1e-12);
        assert_eq!(wilson_interval(0, 0), (0.0, 1.0));
    }
}
