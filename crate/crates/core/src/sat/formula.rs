use alloc::vec;
use alloc::vec::Vec;

use crate::graph;
use crate::{Error, Result};

/// A literal over a 0-based variable index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

impl Literal {
    pub const fn pos(var: usize) -> Self {
        Self { var, positive: true }
    }

    pub const fn neg(var: usize) -> Self {
        Self { var, positive: false }
    }

    /// Whether the literal is true when the variable takes `value`.
    #[inline]
    pub fn holds(self, value: bool) -> bool {
        value == self.positive
    }

    /// Whether the literal is true under the packed assignment `code`.
    #[inline]
    pub fn holds_in_code(self, code: u64) -> bool {
        ((code >> self.var) & 1 == 1) == self.positive
    }
}

/// Structural summary of a formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FormulaStats {
    pub n: usize,
    pub m: usize,
    pub width_min: usize,
    pub width_max: usize,
    pub degree_max: usize,
}

/// A CNF formula over variables `0..num_vars`.
///
/// Invariant: every clause is nonempty and mentions each variable at most
/// once; `incidence[i]` lists the clauses containing variable `i` in
/// ascending order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CnfFormula {
    num_vars: usize,
    clauses: Vec<Vec<Literal>>,
    incidence: Vec<Vec<usize>>,
}

impl CnfFormula {
    pub fn new(num_vars: usize, clauses: Vec<Vec<Literal>>) -> Result<Self> {
        let mut incidence = vec![Vec::new(); num_vars];
        for (j, clause) in clauses.iter().enumerate() {
            if clause.is_empty() {
                return Err(Error::EmptyClause { clause: j });
            }
            for (a, lit) in clause.iter().enumerate() {
                if lit.var >= num_vars {
                    return Err(Error::IndexOutOfRange { index: lit.var, size: num_vars });
                }
                if clause[..a].iter().any(|o| o.var == lit.var) {
                    return Err(Error::DuplicateVariableInClause { clause: j, var: lit.var });
                }
                incidence[lit.var].push(j);
            }
        }
        Ok(Self { num_vars, clauses, incidence })
    }

    /// The formula with no clauses.
    pub fn empty(num_vars: usize) -> Self {
        Self { num_vars, clauses: Vec::new(), incidence: vec![Vec::new(); num_vars] }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Vec<Literal>] {
        &self.clauses
    }

    pub fn clause(&self, j: usize) -> &[Literal] {
        &self.clauses[j]
    }

    /// Clauses containing variable `i`.
    pub fn incidence(&self, i: usize) -> &[usize] {
        &self.incidence[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.incidence[i].len()
    }

    pub fn stats(&self) -> FormulaStats {
        let widths = self.clauses.iter().map(Vec::len);
        FormulaStats {
            n: self.num_vars,
            m: self.clauses.len(),
            width_min: widths.clone().min().unwrap_or(0),
            width_max: widths.max().unwrap_or(0),
            degree_max: self.incidence.iter().map(Vec::len).max().unwrap_or(0),
        }
    }

    /// Variable-interaction graph: `i ~ j` iff they share a clause.
    pub fn interaction_graph(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.num_vars];
        for (i, nb) in adj.iter_mut().enumerate() {
            for &c in &self.incidence[i] {
                nb.extend(self.clauses[c].iter().map(|l| l.var).filter(|&j| j != i));
            }
            nb.sort_unstable();
            nb.dedup();
        }
        adj
    }

    fn check_len(&self, sigma: &Assignment) -> Result<()> {
        if sigma.len() != self.num_vars {
            return Err(Error::LengthMismatch { expected: self.num_vars, found: sigma.len() });
        }
        Ok(())
    }

    pub fn is_satisfying(&self, sigma: &Assignment) -> Result<bool> {
        self.check_len(sigma)?;
        Ok(self.clauses.iter().all(|c| c.iter().any(|l| l.holds(sigma.get(l.var)))))
    }

    pub(crate) fn require_satisfying(&self, sigma: &Assignment) -> Result<()> {
        if self.is_satisfying(sigma)? {
            Ok(())
        } else {
            Err(Error::NotSatisfying)
        }
    }

    /// Number of true literals in each clause.
    pub fn true_counts(&self, sigma: &Assignment) -> Vec<usize> {
        self.clauses
            .iter()
            .map(|c| c.iter().filter(|l| l.holds(sigma.get(l.var))).count())
            .collect()
    }

    /// `i` is flippable iff no clause relies on `i` as its only true literal.
    fn flippable_with_counts(&self, sigma: &Assignment, counts: &[usize], i: usize) -> bool {
        let value = sigma.get(i);
        self.incidence[i].iter().all(|&c| {
            let own_true = self.clauses[c].iter().any(|l| l.var == i && l.holds(value));
            !own_true || counts[c] >= 2
        })
    }

    /// Indicator vector of flippable variables. Requires `sigma` to satisfy
    /// the formula.
    pub fn flippable_mask(&self, sigma: &Assignment) -> Result<Vec<bool>> {
        self.require_satisfying(sigma)?;
        let counts = self.true_counts(sigma);
        Ok((0..self.num_vars).map(|i| self.flippable_with_counts(sigma, &counts, i)).collect())
    }

    /// Variables whose value can be toggled without violating any clause.
    pub fn flippable_set(&self, sigma: &Assignment) -> Result<Vec<usize>> {
        let mask = self.flippable_mask(sigma)?;
        Ok(mask.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i).collect())
    }

    /// Flippability of a single variable, touching only its clauses.
    pub fn is_flippable(&self, sigma: &Assignment, i: usize) -> Result<bool> {
        if i >= self.num_vars {
            return Err(Error::IndexOutOfRange { index: i, size: self.num_vars });
        }
        self.check_len(sigma)?;
        let value = sigma.get(i);
        Ok(self.incidence[i].iter().all(|&c| {
            self.clauses[c].iter().any(|l| l.var != i && l.holds(sigma.get(l.var)))
                || self.clauses[c].iter().any(|l| l.var == i && !l.holds(value))
        }))
    }

    /// Connected components of the interaction graph, each as a standalone
    /// formula plus the map from local to global variable indices.
    pub fn components(&self) -> Vec<Component> {
        let comps = graph::connected_components(&self.interaction_graph());
        let mut local = vec![usize::MAX; self.num_vars];
        let mut out = Vec::with_capacity(comps.len());
        for vars in comps {
            for (a, &v) in vars.iter().enumerate() {
                local[v] = a;
            }
            let mut clause_ids: Vec<usize> =
                vars.iter().flat_map(|&v| self.incidence[v].iter().copied()).collect();
            clause_ids.sort_unstable();
            clause_ids.dedup();
            let clauses = clause_ids
                .iter()
                .map(|&c| {
                    self.clauses[c]
                        .iter()
                        .map(|l| Literal { var: local[l.var], positive: l.positive })
                        .collect()
                })
                .collect();
            let formula = CnfFormula::new(vars.len(), clauses).expect("sub-formula of a valid formula");
            out.push(Component { formula, vars });
        }
        out
    }

    /// Disjoint union of `self` and `other`, with `other`'s variables shifted
    /// past `self`'s.
    pub fn disjoint_union(&self, other: &CnfFormula) -> CnfFormula {
        let shift = self.num_vars;
        let mut clauses = self.clauses.clone();
        clauses.extend(other.clauses.iter().map(|c| {
            c.iter().map(|l| Literal { var: l.var + shift, positive: l.positive }).collect()
        }));
        CnfFormula::new(self.num_vars + other.num_vars, clauses).expect("union of valid formulas")
    }
}

/// A connected piece of a formula.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub formula: CnfFormula,
    /// `vars[a]` is the global index of local variable `a`.
    pub vars: Vec<usize>,
}

/// A truth assignment `σ ∈ {0,1}^n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize), serde(transparent))]
pub struct Assignment {
    bits: Vec<bool>,
}

impl Assignment {
    pub fn new(bits: Vec<bool>) -> Self {
        Self { bits }
    }

    pub fn all(n: usize, value: bool) -> Self {
        Self { bits: vec![value; n] }
    }

    /// Unpacks the low `n` bits of `code`, bit `i` holding variable `i`.
    pub fn from_code(code: u64, n: usize) -> Self {
        Self { bits: (0..n).map(|i| (code >> i) & 1 == 1).collect() }
    }

    /// Packs into a `u64`; requires `len() <= 64`.
    pub fn to_code(&self) -> u64 {
        debug_assert!(self.bits.len() <= 64);
        self.bits.iter().enumerate().fold(0, |acc, (i, &b)| acc | ((b as u64) << i))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        self.bits[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.bits[i] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// `C(σ)`, the number of variables set to 1.
    pub fn ones_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn or2() -> CnfFormula {
        CnfFormula::new(2, vec![vec![Literal::pos(0), Literal::pos(1)]]).unwrap()
    }

    fn a(bits: &[u8]) -> Assignment {
        Assignment::new(bits.iter().map(|&b| b == 1).collect())
    }

    #[test]
    fn rejects_repeated_variable() {
        let err = CnfFormula::new(2, vec![vec![Literal::pos(0), Literal::neg(0)]]).unwrap_err();
        assert_eq!(err, Error::DuplicateVariableInClause { clause: 0, var: 0 });
    }

    #[test]
    fn rejects_out_of_range_and_empty_clause() {
        assert!(matches!(
            CnfFormula::new(1, vec![vec![Literal::pos(1)]]),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert_eq!(CnfFormula::new(1, vec![vec![]]).unwrap_err(), Error::EmptyClause { clause: 0 });
    }

    #[test]
    fn stats_of_small_formulas() {
        let s = or2().stats();
        assert_eq!((s.n, s.m, s.width_min, s.width_max, s.degree_max), (2, 1, 2, 2, 1));
        let s = CnfFormula::empty(3).stats();
        assert_eq!((s.n, s.m, s.degree_max), (3, 0, 0));
        let f = CnfFormula::new(
            3,
            vec![vec![Literal::pos(0), Literal::neg(1)], vec![Literal::pos(1), Literal::pos(2)]],
        )
        .unwrap();
        assert_eq!(f.degree(1), 2);
    }

    #[test]
    fn satisfaction() {
        let f = or2();
        assert!(!f.is_satisfying(&a(&[0, 0])).unwrap());
        assert!(f.is_satisfying(&a(&[1, 0])).unwrap());
        let g = CnfFormula::new(
            2,
            vec![vec![Literal::pos(0), Literal::pos(1)], vec![Literal::neg(0), Literal::pos(1)]],
        )
        .unwrap();
        assert!(g.is_satisfying(&a(&[1, 1])).unwrap());
        assert_eq!(
            f.is_satisfying(&a(&[1])).unwrap_err(),
            Error::LengthMismatch { expected: 2, found: 1 }
        );
    }

    #[test]
    fn ones_count_examples() {
        assert_eq!(a(&[0, 0, 0]).ones_count(), 0);
        assert_eq!(a(&[1, 1, 1]).ones_count(), 3);
        assert_eq!(a(&[1, 0, 1]).ones_count(), 2);
    }

    #[test]
    fn flippable_examples() {
        let f = or2();
        assert_eq!(f.flippable_set(&a(&[1, 1])).unwrap(), vec![0, 1]);
        assert_eq!(f.flippable_set(&a(&[1, 0])).unwrap(), vec![1]);
        assert_eq!(CnfFormula::empty(3).flippable_set(&a(&[0, 1, 0])).unwrap(), vec![0, 1, 2]);
        assert_eq!(f.flippable_set(&a(&[0, 0])).unwrap_err(), Error::NotSatisfying);
        assert!(!f.is_flippable(&a(&[1, 0]), 0).unwrap());
        assert!(f.is_flippable(&a(&[1, 0]), 1).unwrap());
    }

    #[test]
    fn components_examples() {
        let two = CnfFormula::new(
            4,
            vec![vec![Literal::pos(0), Literal::pos(1)], vec![Literal::pos(2), Literal::pos(3)]],
        )
        .unwrap();
        let comps = two.components();
        assert_eq!(comps.len(), 2);
        assert_eq!(comps[1].vars, vec![2, 3]);
        assert_eq!(comps[1].formula.clause(0), &[Literal::pos(0), Literal::pos(1)]);

        let chain = CnfFormula::new(
            3,
            vec![vec![Literal::pos(0), Literal::pos(1)], vec![Literal::pos(1), Literal::pos(2)]],
        )
        .unwrap();
        assert_eq!(chain.components().len(), 1);
        assert_eq!(CnfFormula::empty(3).components().len(), 3);
    }

    #[test]
    fn code_roundtrip() {
        let s = a(&[1, 0, 1, 1]);
        assert_eq!(s.to_code(), 0b1101);
        assert_eq!(Assignment::from_code(0b1101, 4), s);
    }
}
