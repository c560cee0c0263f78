//! Pseudo-likelihood estimation for H-colorings.
//!
//! Coordinates of the gradient and Hessian are the free colors `0..q-1`; the
//! last color is the reference with `β_{q-1} = 0`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::exact::{check_sizes, masked_weights, q_mask, require_valid};
use super::types::{BetaVector, Coloring, ConstraintGraph, SimpleGraph};
use crate::linalg::SymMatrix;
use crate::math::{ln, sqrt};
use crate::{Error, Result};

/// `θ_σ(v, ·)`: the law of `σ_v` given the other vertices.
pub fn theta(g: &SimpleGraph, h: &ConstraintGraph, beta: &BetaVector, sigma: &Coloring, v: usize) -> Result<Vec<f64>> {
    beta.check(h.q())?;
    require_valid(g, h, sigma)?;
    if v >= g.num_vertices() {
        return Err(Error::IndexOutOfRange { index: v, size: g.num_vertices() });
    }
    let mut out = vec![0.0; h.q()];
    let total = masked_weights(&beta.exp_weights(), q_mask(g, h, sigma, v), &mut out);
    for o in out.iter_mut() {
        *o /= total;
    }
    Ok(out)
}

/// Negative log pseudo-likelihood `φ(β; σ) = −Σ_v ln θ_σ(v, σ_v)`.
pub fn phi(g: &SimpleGraph, h: &ConstraintGraph, beta: &BetaVector, sigma: &Coloring) -> Result<f64> {
    beta.check(h.q())?;
    require_valid(g, h, sigma)?;
    let b = beta.full();
    let mut total = 0.0;
    for v in 0..g.num_vertices() {
        let mask = q_mask(g, h, sigma, v);
        let z: f64 = (0..h.q()).filter(|&s| (mask >> s) & 1 == 1).map(|s| crate::math::exp(b[s])).sum();
        total += ln(z) - b[sigma.get(v)];
    }
    Ok(total)
}

/// Gradient of `φ` in the free coordinates: `Σ_v θ_σ(v, r) − c_r(σ)`.
pub fn phi1(g: &SimpleGraph, h: &ConstraintGraph, beta: &BetaVector, sigma: &Coloring) -> Result<Vec<f64>> {
    beta.check(h.q())?;
    require_valid(g, h, sigma)?;
    let q = h.q();
    let weights = beta.exp_weights();
    let mut th = vec![0.0; q];
    let mut grad = vec![0.0; q - 1];
    for v in 0..g.num_vertices() {
        let total = masked_weights(&weights, q_mask(g, h, sigma, v), &mut th);
        for r in 0..q - 1 {
            grad[r] += th[r] / total;
        }
        let own = sigma.get(v);
        if own < q - 1 {
            grad[own] -= 1.0;
        }
    }
    Ok(grad)
}

/// Hessian of `φ`: `Σ_v diag(O_v) − O_v O_vᵀ` with `O_v` the free
/// coordinates of `θ_σ(v, ·)`.
pub fn phi2(g: &SimpleGraph, h: &ConstraintGraph, beta: &BetaVector, sigma: &Coloring) -> Result<SymMatrix> {
    beta.check(h.q())?;
    require_valid(g, h, sigma)?;
    let q = h.q();
    let weights = beta.exp_weights();
    let mut th = vec![0.0; q];
    let mut hess = SymMatrix::zeros(q - 1);
    for v in 0..g.num_vertices() {
        let total = masked_weights(&weights, q_mask(g, h, sigma, v), &mut th);
        let o: Vec<f64> = th[..q - 1].iter().map(|x| x / total).collect();
        hess.add_covariance_term(&o, 1.0);
    }
    Ok(hess)
}

/// `u_{rq}(σ)` for every free color `r`: vertices recolorable to both `r`
/// and the reference color.
pub(crate) fn two_rainbow_counts_unchecked(g: &SimpleGraph, h: &ConstraintGraph, sigma: &Coloring) -> Vec<usize> {
    let q = h.q();
    let mut counts = vec![0; q - 1];
    for v in 0..g.num_vertices() {
        let m = q_mask(g, h, sigma, v);
        if (m >> (q - 1)) & 1 == 1 {
            for (r, c) in counts.iter_mut().enumerate() {
                *c += ((m >> r) & 1) as usize;
            }
        }
    }
    counts
}

/// Lower bound `min_r u_{rq}(σ) · (min_s softmax(β)_s)²` on the smallest
/// eigenvalue of `phi2`.
pub fn strong_convexity_certificate(
    g: &SimpleGraph,
    h: &ConstraintGraph,
    beta: &BetaVector,
    sigma: &Coloring,
) -> Result<f64> {
    beta.check(h.q())?;
    require_valid(g, h, sigma)?;
    let u_min = two_rainbow_counts_unchecked(g, h, sigma).into_iter().min().unwrap_or(0);
    let p = beta.min_softmax();
    Ok(u_min as f64 * p * p)
}

/// The sample enters `φ` only through how many vertices have each pair
/// (allowed-color mask, own color). Grouping by that pair makes every
/// evaluation independent of the graph size.
#[derive(Debug, Clone)]
pub struct PseudoLikelihood {
    q: usize,
    n: usize,
    /// `(mask, own color, multiplicity)`.
    groups: Vec<(u64, usize, f64)>,
}

impl PseudoLikelihood {
    pub fn new(g: &SimpleGraph, h: &ConstraintGraph, sigma: &Coloring) -> Result<Self> {
        require_valid(g, h, sigma)?;
        let mut tally: BTreeMap<(u64, usize), usize> = BTreeMap::new();
        for v in 0..g.num_vertices() {
            *tally.entry((q_mask(g, h, sigma, v), sigma.get(v))).or_insert(0) += 1;
        }
        let groups = tally.into_iter().map(|((m, c), k)| (m, c, k as f64)).collect();
        Ok(Self { q: h.q(), n: g.num_vertices(), groups })
    }

    pub fn dim(&self) -> usize {
        self.q - 1
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    fn weights(&self, free: &[f64]) -> Vec<f64> {
        let mut w: Vec<f64> = free.iter().map(|&b| crate::math::exp(b)).collect();
        w.push(1.0);
        w
    }

    pub fn value(&self, free: &[f64]) -> f64 {
        let w = self.weights(free);
        let mut scratch = vec![0.0; self.q];
        self.groups
            .iter()
            .map(|&(m, c, k)| {
                let z = masked_weights(&w, m, &mut scratch);
                let own = if c < self.q - 1 { free[c] } else { 0.0 };
                k * (ln(z) - own)
            })
            .sum()
    }

    pub fn gradient(&self, free: &[f64]) -> Vec<f64> {
        let w = self.weights(free);
        let mut scratch = vec![0.0; self.q];
        let mut grad = vec![0.0; self.q - 1];
        for &(m, c, k) in &self.groups {
            let z = masked_weights(&w, m, &mut scratch);
            for r in 0..self.q - 1 {
                grad[r] += k * scratch[r] / z;
            }
            if c < self.q - 1 {
                grad[c] -= k;
            }
        }
        grad
    }

    pub fn hessian(&self, free: &[f64]) -> SymMatrix {
        let w = self.weights(free);
        let mut scratch = vec![0.0; self.q];
        let mut hess = SymMatrix::zeros(self.q - 1);
        for &(m, _, k) in &self.groups {
            let z = masked_weights(&w, m, &mut scratch);
            let o: Vec<f64> = scratch[..self.q - 1].iter().map(|x| x / z).collect();
            hess.add_covariance_term(&o, k);
        }
        hess
    }

    /// `u_{rq}` for each free color `r`.
    pub fn two_rainbow_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.q - 1];
        for &(m, _, k) in &self.groups {
            if (m >> (self.q - 1)) & 1 == 1 {
                for (r, c) in counts.iter_mut().enumerate() {
                    if (m >> r) & 1 == 1 {
                        *c += k as usize;
                    }
                }
            }
        }
        counts
    }
}

/// Settings of the projected Newton solver.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EstimatorOptions {
    pub bound: f64,
    /// Stop once the projected-gradient norm is at most this times `n`.
    pub tol_per_vertex: f64,
    pub max_iterations: usize,
    /// Ridge added to the Hessian inside Newton solves.
    pub regularization: f64,
    /// Starting point in free coordinates; zeros if absent.
    pub start: Option<Vec<f64>>,
}

impl Default for EstimatorOptions {
    fn default() -> Self {
        Self { bound: 5.0, tol_per_vertex: 1e-8, max_iterations: 200, regularization: 1e-9, start: None }
    }
}

/// Outcome of the multi-parameter estimator.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ColoringEstimationReport {
    pub beta_hat: BetaVector,
    pub grad_norm_at_hat: f64,
    pub projected_grad_norm: f64,
    /// Certified lower bound on the smallest Hessian eigenvalue at `beta_hat`.
    pub min_hessian_eig_bound: f64,
    /// Smallest Hessian eigenvalue at `beta_hat`, computed directly.
    pub min_hessian_eig: f64,
    /// `u_{rq}(σ)` for each free color `r`.
    pub two_rainbow_counts: Vec<usize>,
    pub iterations: usize,
    pub clamped_coords: Vec<usize>,
    pub converged: bool,
    /// False when the Hessian at `beta_hat` is numerically singular, so some
    /// direction of `β` is not determined by the sample.
    pub identifiable: bool,
    pub bound: f64,
}

fn project(x: &mut [f64], bound: f64) {
    for v in x.iter_mut() {
        *v = v.clamp(-bound, bound);
    }
}

fn projected_gradient_norm(x: &[f64], grad: &[f64], bound: f64) -> f64 {
    let sq: f64 = x
        .iter()
        .zip(grad)
        .map(|(&xi, &gi)| {
            let moved = (xi - gi).clamp(-bound, bound);
            (xi - moved) * (xi - moved)
        })
        .sum();
    sqrt(sq)
}

/// Minimizes `φ(·; σ)` over the box `[−B, B]^{q−1}` with the default options.
pub fn mpl_estimate(g: &SimpleGraph, h: &ConstraintGraph, sigma: &Coloring, bound: f64) -> Result<ColoringEstimationReport> {
    mpl_estimate_with(g, h, sigma, &EstimatorOptions { bound, ..EstimatorOptions::default() })
}

/// Projected damped Newton. Coordinates at a bound whose gradient points
/// outward are held fixed; the Newton step on the rest is solved with a small
/// ridge and shortened by Armijo backtracking.
pub fn mpl_estimate_with(
    g: &SimpleGraph,
    h: &ConstraintGraph,
    sigma: &Coloring,
    opts: &EstimatorOptions,
) -> Result<ColoringEstimationReport> {
    let bound = opts.bound;
    if !(bound > 0.0 && bound <= crate::MAX_ABS_BETA) {
        return Err(Error::InvalidParams(format!("bound must lie in (0, {}], got {bound}", crate::MAX_ABS_BETA)));
    }
    check_sizes(g, h, sigma)?;
    let pl = PseudoLikelihood::new(g, h, sigma)?;
    let dim = pl.dim();
    let n = g.num_vertices().max(1) as f64;
    let tol = opts.tol_per_vertex * n;

    let mut x = match &opts.start {
        Some(s) if s.len() == dim => s.clone(),
        Some(s) => return Err(Error::LengthMismatch { expected: dim, found: s.len() }),
        None => vec![0.0; dim],
    };
    project(&mut x, bound);
    let mut fx = pl.value(&x);
    let mut iterations = 0;
    let mut converged = false;

    while iterations < opts.max_iterations {
        let grad = pl.gradient(&x);
        if projected_gradient_norm(&x, &grad, bound) <= tol {
            converged = true;
            break;
        }
        iterations += 1;
        let free: Vec<usize> = (0..dim)
            .filter(|&r| !((x[r] <= -bound && grad[r] > 0.0) || (x[r] >= bound && grad[r] < 0.0)))
            .collect();
        let mut hess = pl.hessian(&x).submatrix(&free);
        hess.add_to_diagonal(opts.regularization);
        let rhs: Vec<f64> = free.iter().map(|&r| -grad[r]).collect();
        let mut direction = vec![0.0; dim];
        match hess.cholesky_solve(&rhs) {
            Some(step) => {
                for (a, &r) in free.iter().enumerate() {
                    direction[r] = step[a];
                }
            }
            None => {
                for &r in &free {
                    direction[r] = -grad[r];
                }
            }
        }

        let mut accepted = false;
        for dir in [direction, grad.iter().map(|g| -g).collect()] {
            let mut t = 1.0;
            for _ in 0..60 {
                let mut cand: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + t * d).collect();
                project(&mut cand, bound);
                let decrease: f64 = grad.iter().zip(cand.iter().zip(&x)).map(|(g, (c, a))| g * (c - a)).sum();
                let fc = pl.value(&cand);
                if fc <= fx + 1e-4 * decrease && decrease < 0.0 {
                    x = cand;
                    fx = fc;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if accepted {
                break;
            }
        }
        if !accepted {
            break;
        }
    }

    let grad = pl.gradient(&x);
    let projected = projected_gradient_norm(&x, &grad, bound);
    converged = converged || projected <= tol;
    let grad_norm_at_hat = sqrt(grad.iter().map(|v| v * v).sum());
    let beta_hat = BetaVector::from_free(&x);
    let two_rainbow = pl.two_rainbow_counts();
    let p = beta_hat.min_softmax();
    let cert = two_rainbow.iter().copied().min().unwrap_or(0) as f64 * p * p;
    let min_eig = pl.hessian(&x).min_eigenvalue();
    let clamped_coords = (0..dim).filter(|&r| x[r].abs() >= bound).collect();
    Ok(ColoringEstimationReport {
        beta_hat,
        grad_norm_at_hat,
        projected_grad_norm: projected,
        min_hessian_eig_bound: cert,
        min_hessian_eig: min_eig,
        two_rainbow_counts: two_rainbow,
        iterations,
        clamped_coords,
        converged,
        identifiable: min_eig > 1e-9 * n,
        bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge() -> SimpleGraph {
        SimpleGraph::new(2, &[(0, 1)]).unwrap()
    }

    #[test]
    fn theta_examples() {
        let k3 = ConstraintGraph::complete(3).unwrap();
        let t = theta(&SimpleGraph::empty(1), &k3, &BetaVector::zeros(3), &Coloring::new(vec![0]), 0).unwrap();
        assert!(t.iter().all(|&p| (p - 1.0 / 3.0).abs() < 1e-15));
        let beta = BetaVector::from_free(&[2f64.ln(), 0.0]);
        let t = theta(&edge(), &k3, &beta, &Coloring::new(vec![0, 1]), 0).unwrap();
        assert!((t[0] - 2.0 / 3.0).abs() < 1e-15 && t[1] == 0.0 && (t[2] - 1.0 / 3.0).abs() < 1e-15);
        let tri = SimpleGraph::new(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        let t = theta(&tri, &k3, &beta, &Coloring::new(vec![0, 1, 2]), 1).unwrap();
        assert_eq!(t, vec![0.0, 1.0, 0.0]);
    }

    #[test]
    fn grouped_and_direct_routes_agree() {
        let g = SimpleGraph::new(5, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 0)]).unwrap();
        let h = ConstraintGraph::complete(4).unwrap();
        let sigma = Coloring::new(vec![0, 1, 3, 1, 2]);
        let beta = BetaVector::from_free(&[0.3, -0.7, 1.1]);
        let pl = PseudoLikelihood::new(&g, &h, &sigma).unwrap();
        assert!((pl.value(beta.free()) - phi(&g, &h, &beta, &sigma).unwrap()).abs() < 1e-12);
        let g1 = phi1(&g, &h, &beta, &sigma).unwrap();
        for (a, b) in pl.gradient(beta.free()).iter().zip(&g1) {
            assert!((a - b).abs() < 1e-12);
        }
        let h2 = phi2(&g, &h, &beta, &sigma).unwrap();
        for (a, b) in pl.hessian(beta.free()).as_row_major().iter().zip(h2.as_row_major()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn certificate_on_empty_graph() {
        let g = SimpleGraph::empty(6);
        let h = ConstraintGraph::complete(3).unwrap();
        let sigma = Coloring::new(vec![0, 1, 2, 0, 1, 2]);
        let c = strong_convexity_certificate(&g, &h, &BetaVector::zeros(3), &sigma).unwrap();
        assert!((c - 6.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn symmetric_counts_give_zero() {
        let g = SimpleGraph::empty(4);
        let h = ConstraintGraph::complete(4).unwrap();
        let r = mpl_estimate(&g, &h, &Coloring::new(vec![0, 1, 2, 3]), 5.0).unwrap();
        assert!(r.converged && r.identifiable);
        for &b in r.beta_hat.free() {
            assert!(b.abs() < 1e-9);
        }
    }

    #[test]
    fn product_model_with_missing_reference_color() {
        // counts (2,1,1,0): the first coordinate is pushed to the bound and
        // the others solve softmax_r = 1/4 given it
        let g = SimpleGraph::empty(4);
        let h = ConstraintGraph::complete(4).unwrap();
        let r = mpl_estimate(&g, &h, &Coloring::new(vec![0, 0, 1, 2]), 5.0).unwrap();
        let expected = ((5f64.exp() + 1.0) / 2.0).ln();
        let b = r.beta_hat.free();
        assert!((b[0] - 5.0).abs() < 1e-12);
        assert!((b[1] - expected).abs() < 1e-7 && (b[2] - expected).abs() < 1e-7);
        assert_eq!(r.clamped_coords, vec![0]);
    }

    #[test]
    fn frozen_cliques_are_flagged() {
        let g = SimpleGraph::new(6, &[(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)]).unwrap();
        let h = ConstraintGraph::complete(3).unwrap();
        let sigma = Coloring::new(vec![0, 1, 2, 2, 0, 1]);
        let r = mpl_estimate(&g, &h, &sigma, 5.0).unwrap();
        assert!(!r.identifiable);
        assert_eq!(r.min_hessian_eig_bound, 0.0);
        assert_eq!(phi2(&g, &h, &BetaVector::zeros(3), &sigma).unwrap(), SymMatrix::zeros(2));
    }
}
