//! Marking construction, local-lemma feasibility checks and exact
//! verification of the flippability and coupling bounds for hard-SAT.

use alloc::collections::{BTreeMap, VecDeque};
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::exact::for_each_satisfying;
use super::{Assignment, CnfFormula, Literal};
pub use crate::chain::{ChainStep, HistoryRecord};
use crate::chain::conditional_chain;
use crate::graph::{self, IndependentFamily};
use crate::math::{bernoulli_kl, check_beta, exp, ln, ln_1p, sigmoid, LogSumExp};
use crate::{seeded_rng, Error, Result, DEFAULT_MAX_ENUM_VARS};

const LOG2_E: f64 = core::f64::consts::LOG2_E;

/// `KL(λ‖1/2)·log₂e − λ/2`; positive near 0 and negative at 1/2.
pub fn lambda_equation(lambda: f64) -> f64 {
    bernoulli_kl(lambda, 0.5) * LOG2_E - lambda / 2.0
}

/// The root of [`lambda_equation`] in `(0, 1/2)`.
pub fn solve_lambda() -> f64 {
    let (mut lo, mut hi) = (1e-6, 0.5);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if lambda_equation(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-16 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Local-lemma condition for the existence of a marking of a width-`k`,
/// degree-`d` formula: `4e(kd+1) ≤ 2^{k·KL(λ‖1/2)·log₂e}`, compared in logs.
pub fn lll_marking_feasible(k: usize, d: usize) -> bool {
    let lambda = solve_lambda();
    let lhs = ln(4.0) + 1.0 + ln((k * d + 1) as f64);
    lhs <= k as f64 * bernoulli_kl(lambda, 0.5)
}

/// Per-kind quota `⌈λ·w⌉` for a clause of width `w`.
pub fn marking_quota(width: usize, lambda: f64) -> usize {
    let x = lambda * width as f64 - 1e-9;
    if x <= 0.0 {
        0
    } else {
        libm::ceil(x) as usize
    }
}

/// Marked/unmarked label per variable.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Marking {
    pub labels: Vec<bool>,
    pub lambda: f64,
}

impl Marking {
    pub fn new(labels: Vec<bool>, lambda: f64) -> Self {
        Self { labels, lambda }
    }

    pub fn is_marked(&self, i: usize) -> bool {
        self.labels[i]
    }

    pub fn marked_indices(&self) -> Vec<usize> {
        self.labels.iter().enumerate().filter(|(_, &m)| m).map(|(i, _)| i).collect()
    }

    /// Checks every clause meets both quotas, tallying by variable.
    pub fn validate(&self, formula: &CnfFormula) -> bool {
        if self.labels.len() != formula.num_vars() {
            return false;
        }
        let mut marked = vec![0usize; formula.num_clauses()];
        for (i, &m) in self.labels.iter().enumerate() {
            if m {
                for &c in formula.incidence(i) {
                    marked[c] += 1;
                }
            }
        }
        formula.clauses().iter().zip(&marked).all(|(c, &mk)| {
            let q = marking_quota(c.len(), self.lambda);
            mk >= q && c.len() - mk >= q
        })
    }

    fn check_len(&self, formula: &CnfFormula) -> Result<()> {
        if self.labels.len() != formula.num_vars() {
            return Err(Error::LengthMismatch { expected: formula.num_vars(), found: self.labels.len() });
        }
        Ok(())
    }
}

fn first_violation(formula: &CnfFormula, labels: &[bool], quotas: &[usize]) -> Option<usize> {
    formula.clauses().iter().zip(quotas).position(|(c, &q)| {
        let marked = c.iter().filter(|l| labels[l.var]).count();
        marked < q || c.len() - marked < q
    })
}

/// Finds a marking by resampling: start from uniform labels and, while some
/// clause misses a quota, relabel the variables of the first such clause.
pub fn find_marking(formula: &CnfFormula, lambda: f64, max_rounds: u64, seed: u64) -> Result<Marking> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidParams(format!("lambda must lie in [0, 1), got {lambda}")));
    }
    let quotas: Vec<usize> = formula.clauses().iter().map(|c| marking_quota(c.len(), lambda)).collect();
    if formula.clauses().iter().zip(&quotas).any(|(c, &q)| 2 * q > c.len()) {
        return Err(Error::MarkingNotFound { rounds: 0 });
    }
    let mut rng = seeded_rng(seed);
    let mut labels: Vec<bool> = (0..formula.num_vars()).map(|_| rng.gen()).collect();
    for _ in 0..=max_rounds {
        match first_violation(formula, &labels, &quotas) {
            None => return Ok(Marking { labels, lambda }),
            Some(c) => {
                for l in formula.clause(c) {
                    labels[l.var] = rng.gen();
                }
            }
        }
    }
    Err(Error::MarkingNotFound { rounds: max_rounds })
}

#[inline]
fn marked_event_code(formula: &CnfFormula, labels: &[bool], i: usize, code: u64) -> bool {
    formula.incidence(i).iter().all(|&c| {
        formula
            .clause(c)
            .iter()
            .any(|l| l.var != i && labels[l.var] && l.holds_in_code(code))
    })
}

#[inline]
fn flippable_code(formula: &CnfFormula, i: usize, code: u64) -> bool {
    formula.incidence(i).iter().all(|&c| {
        formula
            .clause(c)
            .iter()
            .any(|l| if l.var == i { !l.holds_in_code(code) } else { l.holds_in_code(code) })
    })
}

/// `g_i(σ)`: 1 iff every clause containing `i` is satisfied by a marked
/// variable other than `i`. Implies `e_i(σ) = 1`.
pub fn marked_event(formula: &CnfFormula, sigma: &Assignment, i: usize, marking: &Marking) -> Result<u8> {
    if i >= formula.num_vars() {
        return Err(Error::IndexOutOfRange { index: i, size: formula.num_vars() });
    }
    marking.check_len(formula)?;
    formula.require_satisfying(sigma)?;
    let g = formula.incidence(i).iter().all(|&c| {
        formula
            .clause(c)
            .iter()
            .any(|l| l.var != i && marking.labels[l.var] && l.holds(sigma.get(l.var)))
    });
    Ok(g as u8)
}

/// Greedy family of variables with disjoint interaction neighborhoods,
/// scanning in ascending index order.
pub fn two_hop_independent_set(formula: &CnfFormula) -> IndependentFamily {
    graph::two_hop_independent_set(&formula.interaction_graph())
}

/// Guaranteed size of the greedy family: `n / (1 + k d)²`.
pub fn two_hop_size_bound(formula: &CnfFormula) -> f64 {
    let s = formula.stats();
    let denom = (1 + s.width_max * s.degree_max) as f64;
    formula.num_vars() as f64 / (denom * denom)
}

/// The connected piece of the formula containing `i`, with local indices.
/// Returns the sub-formula, its global variables and the local index of `i`.
fn local_component(formula: &CnfFormula, i: usize) -> (CnfFormula, Vec<usize>, usize) {
    let n = formula.num_vars();
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([i]);
    seen[i] = true;
    let mut vars = Vec::new();
    let mut clause_ids = Vec::new();
    while let Some(v) = queue.pop_front() {
        vars.push(v);
        for &c in formula.incidence(v) {
            clause_ids.push(c);
            for l in formula.clause(c) {
                if !seen[l.var] {
                    seen[l.var] = true;
                    queue.push_back(l.var);
                }
            }
        }
    }
    vars.sort_unstable();
    clause_ids.sort_unstable();
    clause_ids.dedup();
    let mut local = BTreeMap::new();
    for (a, &v) in vars.iter().enumerate() {
        local.insert(v, a);
    }
    let clauses = clause_ids
        .iter()
        .map(|&c| formula.clause(c).iter().map(|l| Literal { var: local[&l.var], positive: l.positive }).collect())
        .collect();
    let sub = CnfFormula::new(vars.len(), clauses).expect("sub-formula of a valid formula");
    let li = local[&i];
    (sub, vars, li)
}

/// Exact marginals of `e_i` and `g_i` for one variable.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlipBounds {
    pub var: usize,
    pub p_e: f64,
    pub p_g: f64,
    pub e_at_least_half: bool,
    pub g_at_least_half: bool,
}

/// Computes `Pr[e_i = 1]` and `Pr[g_i = 1]` by enumerating the component of
/// `i`; the rest of the formula is independent of both events.
pub fn verify_flip_bounds(formula: &CnfFormula, beta: f64, i: usize, marking: &Marking) -> Result<FlipBounds> {
    check_beta(beta)?;
    if i >= formula.num_vars() {
        return Err(Error::IndexOutOfRange { index: i, size: formula.num_vars() });
    }
    marking.check_len(formula)?;
    let (sub, vars, li) = local_component(formula, i);
    let labels: Vec<bool> = vars.iter().map(|&v| marking.labels[v]).collect();
    let mut total = LogSumExp::new();
    let mut with_e = LogSumExp::new();
    let mut with_g = LogSumExp::new();
    for_each_satisfying(&sub, DEFAULT_MAX_ENUM_VARS, |code, ones| {
        let lw = beta * ones as f64;
        total.add(lw);
        if flippable_code(&sub, li, code) {
            with_e.add(lw);
        }
        if marked_event_code(&sub, &labels, li, code) {
            with_g.add(lw);
        }
    })?;
    if total.is_empty() {
        return Err(Error::EmptySupport);
    }
    let z = total.value();
    let p_e = exp(with_e.value() - z);
    let p_g = exp(with_g.value() - z);
    Ok(FlipBounds { var: i, p_e, p_g, e_at_least_half: p_e >= 0.5, g_at_least_half: p_g >= 0.5 })
}

/// Outcome of checking the hypotheses under which `Pr[g_i = 1] ≥ 1/2` is
/// guaranteed, for a nominal clause width `k`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FlipPreconditions {
    pub k: usize,
    pub d: usize,
    pub lambda: f64,
    /// `⌈λk⌉`.
    pub quota: usize,
    /// `k ≥ (2 ln(dk) + θ) / (λ ln(1 + e^{-|β|}))`.
    pub k_condition: bool,
    /// `e(d²k + 1) ≤ (1 + e^{-|β|})^{λk}`.
    pub lll_condition: bool,
    /// `e·d·sigmoid(|β|)^{⌈λk⌉-1} ≤ 1/2`.
    pub tail_condition: bool,
    /// Every clause width lies in `[⌈λk⌉, k]`.
    pub widths_ok: bool,
    /// Every clause containing `i` has `⌈λk⌉` marked and `⌈λk⌉` unmarked
    /// variables.
    pub quotas_ok: bool,
    pub holds: bool,
}

/// Evaluates the hypotheses of the flippability bound for variable `i`.
/// Uses `|β|` throughout, since the worst literal is false with probability
/// `sigmoid(|β|)` under the product measure.
pub fn flip_preconditions(
    formula: &CnfFormula,
    beta: f64,
    i: usize,
    marking: &Marking,
    k: usize,
    theta: f64,
) -> Result<FlipPreconditions> {
    check_beta(beta)?;
    if i >= formula.num_vars() {
        return Err(Error::IndexOutOfRange { index: i, size: formula.num_vars() });
    }
    marking.check_len(formula)?;
    let lambda = solve_lambda();
    let stats = formula.stats();
    let d = stats.degree_max.max(1);
    let kf = k as f64;
    let quota = marking_quota(k, lambda);
    let log_base = ln_1p(exp(-beta.abs()));
    let k_condition = kf >= (2.0 * ln(d as f64 * kf) + theta) / (lambda * log_base);
    let lll_condition = 1.0 + ln((d * d * k + 1) as f64) <= lambda * kf * log_base;
    let worst = sigmoid(beta.abs());
    let tail_condition = quota >= 1
        && core::f64::consts::E * d as f64 * libm::pow(worst, (quota - 1) as f64) <= 0.5;
    let widths_ok = formula.clauses().iter().all(|c| c.len() >= quota && c.len() <= k);
    let quotas_ok = formula.incidence(i).iter().all(|&c| {
        let clause = formula.clause(c);
        let marked = clause.iter().filter(|l| marking.labels[l.var]).count();
        marked >= quota && clause.len() - marked >= quota
    });
    let holds = k >= 1 && k_condition && lll_condition && tail_condition && widths_ok && quotas_ok;
    Ok(FlipPreconditions {
        k,
        d,
        lambda,
        quota,
        k_condition,
        lll_condition,
        tail_condition,
        widths_ok,
        quotas_ok,
        holds,
    })
}

/// For each member `i_t` of `family`, the exact law of `g_{i_t}` given every
/// attainable history `(g_{i_1}, …, g_{i_{t-1}})`.
pub fn verify_coupling_chain(
    formula: &CnfFormula,
    beta: f64,
    marking: &Marking,
    family: &IndependentFamily,
) -> Result<Vec<ChainStep>> {
    check_beta(beta)?;
    marking.check_len(formula)?;
    let r = family.members.len();
    if r > 63 {
        return Err(Error::TooLarge { size: r as u128, cap: 63 });
    }
    if let Some(&bad) = family.members.iter().find(|&&v| v >= formula.num_vars()) {
        return Err(Error::IndexOutOfRange { index: bad, size: formula.num_vars() });
    }
    // law of the indicator vector, packed with member t at bit t
    let mut law: BTreeMap<u64, LogSumExp> = BTreeMap::new();
    let mut total = LogSumExp::new();
    for_each_satisfying(formula, DEFAULT_MAX_ENUM_VARS, |code, ones| {
        let lw = beta * ones as f64;
        total.add(lw);
        let mut mask = 0u64;
        for (t, &v) in family.members.iter().enumerate() {
            if marked_event_code(formula, &marking.labels, v, code) {
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
    Ok(conditional_chain(&law, &family.members))
}

/// Smallest `k` with `k ≥ ((2/λ) ln(dk) + θ) / ln(1 + e^{-B})`.
pub fn sat_k_threshold(d: usize, bound: f64, theta: f64) -> Result<u64> {
    if d == 0 || !(bound > 0.0 && bound.is_finite()) || !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::InvalidParams(format!("need d >= 1, B > 0, theta >= 0; got {d}, {bound}, {theta}")));
    }
    let slope = 2.0 / solve_lambda();
    let denom = ln_1p(exp(-bound));
    let gap = |k: u64| k as f64 - (slope * ln(d as f64 * k as f64) + theta) / denom;
    if gap(1) >= 0.0 {
        return Ok(1);
    }
    // gap is convex in k with its minimum at slope/denom, so past that point
    // it is increasing and the first nonnegative value can be bisected for
    let mut lo = libm::floor(slope / denom).max(1.0) as u64;
    let mut hi = lo.max(2);
    while gap(hi) < 0.0 {
        lo = hi;
        hi *= 2;
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if gap(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn or2() -> CnfFormula {
        CnfFormula::new(2, vec![vec![Literal::pos(0), Literal::pos(1)]]).unwrap()
    }

    fn pairs() -> CnfFormula {
        or2().disjoint_union(&or2())
    }

    #[test]
    fn lambda_root() {
        let l = solve_lambda();
        assert!(l > 0.0 && l < 0.5);
        assert!(lambda_equation(l).abs() <= 1e-12);
        assert!((lambda_equation(0.5) + 0.25).abs() < 1e-15);
    }

    #[test]
    fn marking_feasibility_extremes() {
        assert!(!lll_marking_feasible(1, 1000));
        assert!(lll_marking_feasible(2000, 8));
    }

    #[test]
    fn quota_rounds_up() {
        assert_eq!(marking_quota(10, 0.3), 3);
        assert_eq!(marking_quota(1, 0.3), 1);
        assert_eq!(marking_quota(4, 0.0), 0);
    }

    #[test]
    fn marking_on_wide_clause() {
        let f = CnfFormula::new(10, vec![(0..10).map(Literal::pos).collect()]).unwrap();
        let m = find_marking(&f, 0.3, 1000, 5).unwrap();
        assert!(m.validate(&f));
        let marked = m.marked_indices().len();
        assert!(marked >= 3 && 10 - marked >= 3);
    }

    #[test]
    fn marking_edge_cases() {
        let m = find_marking(&CnfFormula::empty(4), 0.3, 0, 1).unwrap();
        assert!(m.validate(&CnfFormula::empty(4)));
        let unit = CnfFormula::new(1, vec![vec![Literal::pos(0)]]).unwrap();
        assert!(matches!(find_marking(&unit, 0.3, 100, 1), Err(Error::MarkingNotFound { .. })));
    }

    #[test]
    fn marked_event_examples() {
        let s = Assignment::all(2, true);
        let both = Marking::new(vec![true, true], 0.3);
        assert_eq!(marked_event(&or2(), &s, 0, &both).unwrap(), 1);
        let x2_unmarked = Marking::new(vec![true, false], 0.3);
        assert_eq!(marked_event(&or2(), &s, 0, &x2_unmarked).unwrap(), 0);
        let f = CnfFormula::empty(1);
        assert_eq!(marked_event(&f, &Assignment::all(1, false), 0, &Marking::new(vec![false], 0.3)).unwrap(), 1);
    }

    #[test]
    fn greedy_family_examples() {
        assert_eq!(two_hop_independent_set(&pairs()).members, vec![0, 2]);
        assert_eq!(two_hop_independent_set(&CnfFormula::empty(5)).members, vec![0, 1, 2, 3, 4]);
        let chain = CnfFormula::new(5, (0..4).map(|i| vec![Literal::pos(i), Literal::pos(i + 1)]).collect()).unwrap();
        assert_eq!(two_hop_independent_set(&chain).members, vec![0, 3]);
    }

    #[test]
    fn flip_bound_examples() {
        let m = Marking::new(vec![true; 3], 0.3);
        let b = verify_flip_bounds(&CnfFormula::empty(3), 0.5, 1, &m).unwrap();
        assert_eq!(b.p_e, 1.0);
        let forced = CnfFormula::new(2, vec![vec![Literal::pos(0)], vec![Literal::pos(1)]]).unwrap();
        let m2 = Marking::new(vec![true; 2], 0.3);
        assert_eq!(verify_flip_bounds(&forced, 0.0, 0, &m2).unwrap().p_e, 0.0);
        assert_eq!(verify_flip_bounds(&forced, 0.0, 1, &m2).unwrap().p_e, 0.0);
        let b = verify_flip_bounds(&or2(), 0.0, 0, &m2).unwrap();
        assert!((b.p_e - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn chain_on_independent_pairs() {
        let f = pairs();
        let m = Marking::new(vec![true; 4], 0.3);
        let fam = two_hop_independent_set(&f);
        let steps = verify_coupling_chain(&f, 0.0, &m, &fam).unwrap();
        assert_eq!(steps.len(), 2);
        for s in &steps {
            assert!((s.min_conditional - 2.0 / 3.0).abs() < 1e-14);
            for h in &s.histories {
                assert!((h.conditional - 2.0 / 3.0).abs() < 1e-14);
            }
        }
        let first = verify_flip_bounds(&f, 0.0, 0, &m).unwrap();
        assert!((steps[0].marginal - first.p_g).abs() < 1e-14);
    }

    #[test]
    fn threshold_monotone_and_tight() {
        let t8 = sat_k_threshold(8, 0.1, 0.0).unwrap();
        let t16 = sat_k_threshold(16, 0.1, 0.0).unwrap();
        assert!(t16 >= t8);
        assert!(sat_k_threshold(8, 1.0, 0.0).unwrap() >= sat_k_threshold(8, 0.5, 0.0).unwrap());
        let lambda = solve_lambda();
        let rhs = |k: u64| ((2.0 / lambda) * (8.0 * k as f64).ln()) / (1.0 + (-0.1f64).exp()).ln();
        assert!(t8 as f64 >= rhs(t8));
        assert!(((t8 - 1) as f64) < rhs(t8 - 1));
    }
}
