//! Formula generators.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use super::exact::count_satisfying;
use super::{CnfFormula, Literal};
use crate::{seeded_rng, Error, Result};

const MAX_UNIQUE_SAT_K: usize = 20;

/// A formula whose only satisfying assignment is all-true. For each
/// variable `i` it emits every sign pattern over the `k − 1` cyclically
/// following variables, each clause led by the positive literal `x_i`; the
/// patterns jointly force `x_i = 1`.
pub fn gen_unique_sat(n: usize, k: usize) -> Result<CnfFormula> {
    if k < 2 || n < k || k > MAX_UNIQUE_SAT_K {
        return Err(Error::InvalidParams(format!(
            "need 2 <= k <= n and k <= {MAX_UNIQUE_SAT_K}; got n={n}, k={k}"
        )));
    }
    let mut clauses = Vec::with_capacity(n << (k - 1));
    for i in 0..n {
        for signs in 0u64..(1 << (k - 1)) {
            let mut clause = Vec::with_capacity(k);
            clause.push(Literal::pos(i));
            for j in 1..k {
                let var = (i + j) % n;
                clause.push(Literal { var, positive: signs >> (j - 1) & 1 == 1 });
            }
            clauses.push(clause);
        }
    }
    CnfFormula::new(n, clauses)
}

/// Exact number of satisfying assignments.
pub fn verify_unique(formula: &CnfFormula) -> Result<u64> {
    count_satisfying(formula)
}

const BOUNDED_ATTEMPTS: u64 = 10_000;

/// `m` clauses of width exactly `k` over `n` variables, each variable in at
/// most `d` clauses, with uniform polarities. Variables are drawn with
/// probability proportional to their remaining capacity; a construction that
/// runs out of distinct candidates is restarted.
pub fn gen_random_bounded(n: usize, k: usize, d: usize, m: usize, seed: u64) -> Result<CnfFormula> {
    if k == 0 || k > n {
        return Err(Error::InvalidParams(format!("need 1 <= k <= n; got n={n}, k={k}")));
    }
    if m * k > n * d {
        return Err(Error::InvalidParams(format!("{m} clauses of width {k} exceed capacity n*d = {}", n * d)));
    }
    let mut rng = seeded_rng(seed);
    'attempt: for _ in 0..BOUNDED_ATTEMPTS {
        let mut capacity = vec![d; n];
        let mut clauses = Vec::with_capacity(m);
        for _ in 0..m {
            let mut chosen: Vec<usize> = Vec::with_capacity(k);
            for _ in 0..k {
                let total: usize = (0..n).filter(|v| !chosen.contains(v)).map(|v| capacity[v]).sum();
                if total == 0 {
                    continue 'attempt;
                }
                let mut ticket = rng.gen_range(0..total);
                let pick = (0..n)
                    .filter(|v| !chosen.contains(v))
                    .find(|&v| {
                        if ticket < capacity[v] {
                            true
                        } else {
                            ticket -= capacity[v];
                            false
                        }
                    })
                    .expect("ticket below total capacity");
                chosen.push(pick);
            }
            chosen.sort_unstable();
            for &v in &chosen {
                capacity[v] -= 1;
            }
            clauses.push(chosen.into_iter().map(|var| Literal { var, positive: rng.gen() }).collect());
        }
        return CnfFormula::new(n, clauses);
    }
    Err(Error::GenerationBudgetExceeded { attempts: BOUNDED_ATTEMPTS })
}

/// Like [`gen_random_bounded`], but redraws until the formula has at least
/// one satisfying assignment. Every connected component must be small
/// enough to enumerate.
pub fn gen_random_satisfiable(n: usize, k: usize, d: usize, m: usize, seed: u64) -> Result<CnfFormula> {
    let mut rng = seeded_rng(seed);
    for _ in 0..BOUNDED_ATTEMPTS {
        let f = gen_random_bounded(n, k, d, m, rng.gen())?;
        let mut satisfiable = true;
        for c in f.components() {
            if count_satisfying(&c.formula)? == 0 {
                satisfiable = false;
                break;
            }
        }
        if satisfiable {
            return Ok(f);
        }
    }
    Err(Error::GenerationBudgetExceeded { attempts: BOUNDED_ATTEMPTS })
}

/// `copies` disjoint copies of `gadget`, copy `c` using variables
/// `c·n_g .. (c+1)·n_g`.
pub fn gen_gadget_union(gadget: &CnfFormula, copies: usize) -> Result<CnfFormula> {
    if copies == 0 {
        return Err(Error::InvalidParams("copies must be at least 1".into()));
    }
    let ng = gadget.num_vars();
    let mut clauses = Vec::with_capacity(gadget.num_clauses() * copies);
    for c in 0..copies {
        clauses.extend(gadget.clauses().iter().map(|cl| {
            cl.iter().map(|l| Literal { var: l.var + c * ng, positive: l.positive }).collect::<Vec<_>>()
        }));
    }
    CnfFormula::new(ng * copies, clauses)
}

/// Shuffles clause order and literal order; the formula is unchanged as a
/// set of constraints.
pub fn shuffle_clauses(formula: &CnfFormula, seed: u64) -> CnfFormula {
    let mut rng = seeded_rng(seed);
    let mut clauses: Vec<Vec<Literal>> = formula.clauses().to_vec();
    for c in clauses.iter_mut() {
        c.shuffle(&mut rng);
    }
    clauses.shuffle(&mut rng);
    CnfFormula::new(formula.num_vars(), clauses).expect("permutation of a valid formula")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sat::enumerate_distribution;

    #[test]
    fn unique_sat_k2_n3() {
        let f = gen_unique_sat(3, 2).unwrap();
        assert_eq!(f.num_clauses(), 6);
        assert_eq!(f.clause(0), &[Literal::pos(0), Literal::neg(1)]);
        assert_eq!(f.clause(1), &[Literal::pos(0), Literal::pos(1)]);
        assert_eq!(verify_unique(&f).unwrap(), 1);
        assert!(f.is_satisfying(&crate::sat::Assignment::all(3, true)).unwrap());
    }

    #[test]
    fn unique_sat_k3_n6() {
        assert_eq!(verify_unique(&gen_unique_sat(6, 3).unwrap()).unwrap(), 1);
    }

    #[test]
    fn unique_sat_degree_is_k_times_half_patterns() {
        for k in 2..=4 {
            let f = gen_unique_sat(10, k).unwrap();
            assert_eq!(f.stats().degree_max, k << (k - 1));
        }
    }

    #[test]
    fn unique_sat_rejects_bad_params() {
        assert!(gen_unique_sat(1, 2).is_err());
        assert!(gen_unique_sat(5, 1).is_err());
    }

    #[test]
    fn count_examples() {
        let or2 = CnfFormula::new(2, vec![vec![Literal::pos(0), Literal::pos(1)]]).unwrap();
        assert_eq!(verify_unique(&or2).unwrap(), 3);
    }

    #[test]
    fn bounded_generator_respects_degree_and_is_deterministic() {
        let f = gen_random_bounded(12, 3, 3, 12, 7).unwrap();
        let s = f.stats();
        assert!(s.degree_max <= 3);
        assert_eq!((s.width_min, s.width_max, s.m), (3, 3, 12));
        assert_eq!(f, gen_random_bounded(12, 3, 3, 12, 7).unwrap());
    }

    #[test]
    fn bounded_generator_with_k_equal_n() {
        let f = gen_random_bounded(4, 4, 2, 2, 1).unwrap();
        for c in f.clauses() {
            assert_eq!(c.len(), 4);
        }
    }

    #[test]
    fn gadget_union_multiplies_partition_function() {
        let or2 = CnfFormula::new(2, vec![vec![Literal::pos(0), Literal::pos(1)]]).unwrap();
        let u = gen_gadget_union(&or2, 3).unwrap();
        let s = u.stats();
        assert_eq!((s.n, s.m), (6, 3));
        assert_eq!(u.components().len(), 3);
        let beta = 0.37;
        let one = enumerate_distribution(&or2, beta).unwrap().log_partition();
        let all = enumerate_distribution(&u, beta).unwrap().log_partition();
        assert!((all - 3.0 * one).abs() < 1e-12);
        assert!(gen_gadget_union(&or2, 0).is_err());
    }
}
