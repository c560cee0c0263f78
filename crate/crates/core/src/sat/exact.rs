use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{Assignment, CnfFormula, Component};
use crate::math::{check_beta, sigmoid};
use crate::{seeded_rng, Error, ExactDistribution, Result, DEFAULT_MAX_ENUM_VARS};

/// Depth-first enumeration of satisfying assignments. Each clause is checked
/// once its largest variable is assigned, which prunes dead branches early.
struct Enumerator<'a> {
    formula: &'a CnfFormula,
    /// Clauses indexed by their largest variable.
    closing: Vec<Vec<usize>>,
}

impl<'a> Enumerator<'a> {
    fn new(formula: &'a CnfFormula) -> Self {
        let mut closing = vec![Vec::new(); formula.num_vars()];
        for (j, c) in formula.clauses().iter().enumerate() {
            let top = c.iter().map(|l| l.var).max().expect("nonempty clause");
            closing[top].push(j);
        }
        Self { formula, closing }
    }

    fn run<V: FnMut(u64, u32)>(&self, visit: &mut V) {
        if self.formula.num_vars() == 0 {
            visit(0, 0);
            return;
        }
        self.descend(0, 0, 0, visit);
    }

    fn descend<V: FnMut(u64, u32)>(&self, v: usize, code: u64, ones: u32, visit: &mut V) {
        for bit in [0u64, 1] {
            let next = code | (bit << v);
            let ok = self.closing[v]
                .iter()
                .all(|&j| self.formula.clause(j).iter().any(|l| l.holds_in_code(next)));
            if !ok {
                continue;
            }
            let next_ones = ones + bit as u32;
            if v + 1 == self.formula.num_vars() {
                visit(next, next_ones);
            } else {
                self.descend(v + 1, next, next_ones, visit);
            }
        }
    }
}

fn check_cap(n: usize, cap: usize) -> Result<()> {
    if n > cap || n > 63 {
        return Err(Error::TooLarge { size: n as u128, cap: cap as u128 });
    }
    Ok(())
}

/// Calls `visit(code, ones)` for every satisfying assignment, where bit `i` of
/// `code` is variable `i`. Fails with `TooLarge` above `max_vars` variables.
pub fn for_each_satisfying<V: FnMut(u64, u32)>(
    formula: &CnfFormula,
    max_vars: usize,
    mut visit: V,
) -> Result<()> {
    check_cap(formula.num_vars(), max_vars)?;
    Enumerator::new(formula).run(&mut visit);
    Ok(())
}

/// Number of satisfying assignments.
pub fn count_satisfying(formula: &CnfFormula) -> Result<u64> {
    let mut count = 0u64;
    for_each_satisfying(formula, DEFAULT_MAX_ENUM_VARS, |_, _| count += 1)?;
    Ok(count)
}

/// The exact distribution `Pr[σ] ∝ exp(β C(σ))` over satisfying assignments.
pub fn enumerate_distribution(formula: &CnfFormula, beta: f64) -> Result<ExactDistribution> {
    enumerate_distribution_capped(formula, beta, DEFAULT_MAX_ENUM_VARS)
}

pub fn enumerate_distribution_capped(
    formula: &CnfFormula,
    beta: f64,
    max_vars: usize,
) -> Result<ExactDistribution> {
    check_beta(beta)?;
    let mut states = Vec::new();
    for_each_satisfying(formula, max_vars, |code, ones| states.push((code, beta * ones as f64)))?;
    ExactDistribution::from_log_weights(states)
}

/// Splits a formula into the connected components of its interaction graph.
pub fn decompose_components(formula: &CnfFormula) -> Vec<Component> {
    formula.components()
}

/// Exact sampler for the hard-SAT model. The distribution factorizes over
/// components, so each component is enumerated separately and sampled
/// independently.
#[derive(Debug, Clone)]
pub struct ProductSampler {
    num_vars: usize,
    parts: Vec<(Vec<usize>, ExactDistribution)>,
}

impl ProductSampler {
    pub fn new(formula: &CnfFormula, beta: f64) -> Result<Self> {
        Self::with_cap(formula, beta, DEFAULT_MAX_ENUM_VARS)
    }

    pub fn with_cap(formula: &CnfFormula, beta: f64, max_vars: usize) -> Result<Self> {
        check_beta(beta)?;
        let mut parts = Vec::new();
        for comp in formula.components() {
            let size = comp.vars.len();
            if size > max_vars || size > 63 {
                return Err(Error::ComponentTooLarge { size, cap: max_vars });
            }
            let dist = enumerate_distribution_capped(&comp.formula, beta, max_vars)?;
            parts.push((comp.vars, dist));
        }
        Ok(Self { num_vars: formula.num_vars(), parts })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Assignment {
        let mut out = Assignment::all(self.num_vars, false);
        for (vars, dist) in &self.parts {
            let code = dist.sample_code(rng);
            for (a, &v) in vars.iter().enumerate() {
                out.set(v, (code >> a) & 1 == 1);
            }
        }
        out
    }

    /// `log Z` of the whole formula, the sum over components.
    pub fn log_partition(&self) -> f64 {
        self.parts.iter().map(|(_, d)| d.log_partition()).sum()
    }
}

/// One exact draw, deterministic in `seed`.
pub fn sample_exact(formula: &CnfFormula, beta: f64, seed: u64) -> Result<Assignment> {
    let sampler = ProductSampler::new(formula, beta)?;
    Ok(sampler.sample(&mut seeded_rng(seed)))
}

/// One heat-bath update: pick a uniform site and, if it is flippable, set it
/// to 1 with probability `sigmoid(β)`.
pub fn glauber_step<R: Rng + ?Sized>(formula: &CnfFormula, beta: f64, sigma: &mut Assignment, rng: &mut R) {
    let n = formula.num_vars();
    if n == 0 {
        return;
    }
    let i = rng.gen_range(0..n);
    let p1 = sigmoid(beta);
    let u: f64 = rng.gen();
    if formula.is_flippable(sigma, i).expect("index in range") {
        sigma.set(i, u < p1);
    }
}

/// Runs `steps` heat-bath updates from `start`.
pub fn sample_glauber(
    formula: &CnfFormula,
    beta: f64,
    start: &Assignment,
    steps: u64,
    seed: u64,
) -> Result<Assignment> {
    check_beta(beta)?;
    formula.require_satisfying(start)?;
    let mut rng = seeded_rng(seed);
    let mut sigma = start.clone();
    for _ in 0..steps {
        glauber_step(formula, beta, &mut sigma, &mut rng);
    }
    Ok(sigma)
}

/// One-step transition law of the heat-bath chain from `sigma`, as
/// `(code, probability)` pairs. Codes may repeat; probabilities sum to 1.
pub fn glauber_transitions(formula: &CnfFormula, beta: f64, sigma: &Assignment) -> Result<Vec<(u64, f64)>> {
    check_beta(beta)?;
    formula.require_satisfying(sigma)?;
    let n = formula.num_vars();
    let code = sigma.to_code();
    if n == 0 {
        return Ok(vec![(code, 1.0)]);
    }
    let p1 = sigmoid(beta);
    let site = 1.0 / n as f64;
    let mut out = Vec::with_capacity(2 * n);
    for i in 0..n {
        if formula.is_flippable(sigma, i)? {
            out.push((code | (1 << i), site * p1));
            out.push((code & !(1 << i), site * (1.0 - p1)));
        } else {
            out.push((code, site));
        }
    }
    Ok(out)
}
