//! Pseudo-likelihood estimation for the hard-SAT model.
//!
//! Only flippable variables contribute: a non-flippable variable has a point
//! mass conditional, so its term in the pseudo-likelihood is identically zero.

use super::{Assignment, CnfFormula};
use crate::math::{bisect_convex_minimizer, check_beta, ln, log_add_exp, logistic_variance, sigmoid};
use crate::{Error, Result};

/// Negative log pseudo-likelihood `φ(β; σ)`.
pub fn pseudo_likelihood(formula: &CnfFormula, sigma: &Assignment, beta: f64) -> Result<f64> {
    let mask = formula.flippable_mask(sigma)?;
    let mut phi = 0.0;
    for (i, _) in mask.iter().enumerate().filter(|(_, &f)| f) {
        // log(e^{βC(1,σ_{-i})} + e^{βC(0,σ_{-i})}) - βC(σ), with βC(σ) factored out
        let s = sigma.get(i) as u8 as f64;
        phi += log_add_exp(beta * (1.0 - s), -beta * s);
    }
    Ok(phi)
}

/// `dφ/dβ = Σ_{i flippable} (sigmoid(β) - σ_i)`.
pub fn grad(formula: &CnfFormula, sigma: &Assignment, beta: f64) -> Result<f64> {
    let mask = formula.flippable_mask(sigma)?;
    let p = sigmoid(beta);
    Ok(mask
        .iter()
        .enumerate()
        .filter(|(_, &f)| f)
        .map(|(i, _)| p - sigma.get(i) as u8 as f64)
        .sum())
}

/// `d²φ/dβ² = sigmoid'(β) · |flippable|`.
pub fn hess(formula: &CnfFormula, sigma: &Assignment, beta: f64) -> Result<f64> {
    let count = formula.flippable_set(sigma)?.len();
    Ok(logistic_variance(beta) * count as f64)
}

/// `e_i(σ)`: 1 iff variable `i` is flippable.
pub fn flippable_event(formula: &CnfFormula, sigma: &Assignment, i: usize) -> Result<u8> {
    if i >= formula.num_vars() {
        return Err(Error::IndexOutOfRange { index: i, size: formula.num_vars() });
    }
    formula.require_satisfying(sigma)?;
    Ok(formula.is_flippable(sigma, i)? as u8)
}

/// Outcome of the single-sample estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SatEstimationReport {
    pub beta_hat: f64,
    pub clamped: bool,
    pub grad_at_hat: f64,
    pub flippable_count: usize,
    pub ones_among_flippable: usize,
    pub beta_bound: f64,
    /// False when no variable is flippable, so the sample carries no
    /// information about β; `beta_hat` is then 0.
    pub identifiable: bool,
}

fn check_bound(bound: f64) -> Result<()> {
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(Error::InvalidParams(alloc::format!("bound must be positive, got {bound}")));
    }
    Ok(())
}

/// Minimizes `φ(·; σ)` over `[-B, B]`. The minimizer has the closed form
/// `ln(m1 / m0)`, where `m1` and `m0` count flippable variables set to 1 and
/// 0; a zero count pushes the estimate to the boundary.
pub fn mpl_estimate(formula: &CnfFormula, sigma: &Assignment, bound: f64) -> Result<SatEstimationReport> {
    check_bound(bound)?;
    let mask = formula.flippable_mask(sigma)?;
    let flippable_count = mask.iter().filter(|&&f| f).count();
    let m1 = mask.iter().enumerate().filter(|(i, &f)| f && sigma.get(*i)).count();
    let m0 = flippable_count - m1;
    let (beta_hat, clamped, identifiable) = if flippable_count == 0 {
        (0.0, false, false)
    } else if m0 == 0 {
        (bound, true, true)
    } else if m1 == 0 {
        (-bound, true, true)
    } else {
        let raw = ln(m1 as f64 / m0 as f64);
        let b = raw.clamp(-bound, bound);
        (b, b != raw, true)
    };
    let p = sigmoid(beta_hat);
    let grad_at_hat = flippable_count as f64 * p - m1 as f64;
    Ok(SatEstimationReport {
        beta_hat,
        clamped,
        grad_at_hat,
        flippable_count,
        ones_among_flippable: m1,
        beta_bound: bound,
        identifiable,
    })
}

/// Generic minimizer of `φ(·; σ)` over `[-B, B]` by bisection on the
/// gradient.
pub fn mpl_estimate_bisection(formula: &CnfFormula, sigma: &Assignment, bound: f64) -> Result<f64> {
    check_bound(bound)?;
    check_beta(bound)?;
    formula.require_satisfying(sigma)?;
    Ok(bisect_convex_minimizer(
        |b| grad(formula, sigma, b).expect("validated sample"),
        -bound,
        bound,
        1e-13,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::Literal;
    use alloc::vec;

    fn a(bits: &[u8]) -> Assignment {
        Assignment::new(bits.iter().map(|&b| b == 1).collect())
    }

    fn or2() -> CnfFormula {
        CnfFormula::new(2, vec![vec![Literal::pos(0), Literal::pos(1)]]).unwrap()
    }

    fn forced2() -> CnfFormula {
        CnfFormula::new(2, vec![vec![Literal::pos(0)], vec![Literal::pos(1)]]).unwrap()
    }

    #[test]
    fn pseudo_likelihood_examples() {
        let e = CnfFormula::empty(2);
        assert!((pseudo_likelihood(&e, &a(&[1, 0]), 0.0).unwrap() - 2.0 * 2f64.ln()).abs() < 1e-15);
        assert_eq!(pseudo_likelihood(&forced2(), &a(&[1, 1]), 0.7).unwrap(), 0.0);
        let expected = 2.0 * ((2f64.exp() + 1f64.exp()).ln() - 2.0);
        assert!((pseudo_likelihood(&or2(), &a(&[1, 1]), 1.0).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn grad_examples() {
        assert_eq!(grad(&CnfFormula::empty(2), &a(&[1, 0]), 0.0).unwrap(), 0.0);
        assert_eq!(grad(&or2(), &a(&[1, 1]), 0.0).unwrap(), -1.0);
    }

    #[test]
    fn hess_examples() {
        assert_eq!(hess(&CnfFormula::empty(4), &a(&[0, 1, 0, 0]), 0.0).unwrap(), 1.0);
        assert_eq!(hess(&forced2(), &a(&[1, 1]), 0.3).unwrap(), 0.0);
    }

    #[test]
    fn flippable_event_examples() {
        assert_eq!(flippable_event(&or2(), &a(&[1, 0]), 0).unwrap(), 0);
        assert_eq!(flippable_event(&or2(), &a(&[1, 0]), 1).unwrap(), 1);
        assert_eq!(flippable_event(&forced2(), &a(&[1, 1]), 1).unwrap(), 0);
        assert!(matches!(flippable_event(&or2(), &a(&[1, 0]), 2), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn estimator_examples() {
        let e = CnfFormula::empty(4);
        let r = mpl_estimate(&e, &a(&[1, 1, 0, 0]), 5.0).unwrap();
        assert_eq!(r.beta_hat, 0.0);
        assert!(r.identifiable && !r.clamped);

        let r = mpl_estimate(&e, &a(&[1, 1, 1, 0]), 5.0).unwrap();
        assert!((r.beta_hat - 3f64.ln()).abs() < 1e-15);
        let b = mpl_estimate_bisection(&e, &a(&[1, 1, 1, 0]), 5.0).unwrap();
        assert!((b - r.beta_hat).abs() < 1e-10);

        let r = mpl_estimate(&or2(), &a(&[1, 1]), 2.0).unwrap();
        assert_eq!(r.beta_hat, 2.0);
        assert!(r.clamped);

        let r = mpl_estimate(&forced2(), &a(&[1, 1]), 2.0).unwrap();
        assert!(!r.identifiable);
        assert_eq!(r.flippable_count, 0);
        assert_eq!(r.beta_hat, 0.0);
    }

    #[test]
    fn invalid_bound() {
        assert!(matches!(mpl_estimate(&or2(), &a(&[1, 1]), 0.0), Err(Error::InvalidParams(_))));
    }
}
