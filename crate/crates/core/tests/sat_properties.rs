use hardmrf_core::sat::instances::{gen_gadget_union, gen_random_satisfiable, gen_unique_sat, verify_unique};
use hardmrf_core::sat::lll::{find_marking, Marking, flip_preconditions, solve_lambda, verify_flip_bounds};
use hardmrf_core::sat::mpl::{grad, hess, mpl_estimate, mpl_estimate_bisection, pseudo_likelihood};
use hardmrf_core::sat::{
    count_satisfying, enumerate_distribution, glauber_transitions, Assignment, CnfFormula, ProductSampler,
};
use hardmrf_core::seeded_rng;
use proptest::prelude::*;

fn formula_strategy() -> impl Strategy<Value = CnfFormula> {
    (4usize..=12, 2usize..=3, 1usize..=3, any::<u64>()).prop_filter_map("generator budget", |(n, k, d, seed)| {
        let m = (n * d / k).max(1);
        gen_random_satisfiable(n, k, d, m, seed).ok()
    })
}

fn samples(formula: &CnfFormula, beta: f64, count: usize, seed: u64) -> Vec<Assignment> {
    let sampler = ProductSampler::new(formula, beta).unwrap();
    let mut rng = seeded_rng(seed);
    (0..count).map(|_| sampler.sample(&mut rng)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn derivatives_match_finite_differences(f in formula_strategy(), beta in -2.0f64..2.0, seed in any::<u64>()) {
        let h = 1e-4;
        for sigma in samples(&f, beta, 3, seed) {
            let fd1 = (pseudo_likelihood(&f, &sigma, beta + h).unwrap() - pseudo_likelihood(&f, &sigma, beta - h).unwrap()) / (2.0 * h);
            let g = grad(&f, &sigma, beta).unwrap();
            prop_assert!((g - fd1).abs() <= 1e-6 * g.abs().max(1.0));
            let fd2 = (grad(&f, &sigma, beta + h).unwrap() - grad(&f, &sigma, beta - h).unwrap()) / (2.0 * h);
            let hh = hess(&f, &sigma, beta).unwrap();
            prop_assert!((hh - fd2).abs() <= 1e-5 * hh.abs().max(1.0));
        }
    }

    #[test]
    fn score_has_zero_mean_and_bounded_second_moment(f in formula_strategy(), beta in -2.0f64..2.0) {
        let dist = enumerate_distribution(&f, beta).unwrap();
        let n = f.num_vars();
        let stats = f.stats();
        let mut m1 = 0.0;
        let mut m2 = 0.0;
        for (code, p) in dist.iter() {
            let g = grad(&f, &Assignment::from_code(code, n), beta).unwrap();
            m1 += p * g;
            m2 += p * g * g;
        }
        prop_assert!(m1.abs() <= 1e-10);
        prop_assert!(m2 <= (stats.width_max * stats.degree_max * n) as f64);
    }

    #[test]
    fn closed_form_matches_bisection(f in formula_strategy(), beta in -2.0f64..2.0, seed in any::<u64>()) {
        for sigma in samples(&f, beta, 4, seed) {
            let report = mpl_estimate(&f, &sigma, 5.0).unwrap();
            if report.identifiable && !report.clamped {
                let b = mpl_estimate_bisection(&f, &sigma, 5.0).unwrap();
                prop_assert!((report.beta_hat - b).abs() <= 1e-8);
                prop_assert!(report.grad_at_hat.abs() <= 1e-9 * f.num_vars() as f64);
            }
        }
    }

    #[test]
    fn glauber_preserves_the_exact_law(f in formula_strategy(), beta in -1.5f64..1.5) {
        let dist = enumerate_distribution(&f, beta).unwrap();
        let mut pushed = std::collections::HashMap::new();
        for (code, p) in dist.iter() {
            for (next, t) in glauber_transitions(&f, beta, &Assignment::from_code(code, f.num_vars())).unwrap() {
                *pushed.entry(next).or_insert(0.0) += p * t;
            }
        }
        for (code, p) in dist.iter() {
            prop_assert!((pushed.get(&code).copied().unwrap_or(0.0) - p).abs() <= 1e-10);
        }
        prop_assert_eq!(pushed.len(), dist.len());
    }

    #[test]
    fn product_sampler_partition_matches_enumeration(gadget in formula_strategy(), copies in 1usize..=2, beta in -1.0f64..1.0) {
        let f = gen_gadget_union(&gadget, copies).unwrap();
        prop_assume!(f.num_vars() <= 24);
        let exact = enumerate_distribution(&f, beta).unwrap().log_partition();
        let product = ProductSampler::new(&f, beta).unwrap().log_partition();
        prop_assert!((exact - product).abs() <= 1e-9 * exact.abs().max(1.0));
    }
}

#[test]
fn unique_formulas_have_one_solution_and_are_flagged() {
    for k in 2..=3 {
        for n in k..=12 {
            let f = gen_unique_sat(n, k).unwrap();
            assert_eq!(verify_unique(&f).unwrap(), 1, "n={n} k={k}");
            assert_eq!(count_satisfying(&f).unwrap(), 1);
            let dist = enumerate_distribution(&f, 0.7).unwrap();
            let sigma = Assignment::from_code(dist.codes()[0], n);
            assert!(!mpl_estimate(&f, &sigma, 5.0).unwrap().identifiable);
        }
    }
}

#[test]
fn flip_bounds_hold_where_preconditions_pass() {
    // one clause of width 22 has degree 1 and stays enumerable; nominal
    // k = 38 makes its width exactly twice the quota
    let lambda = solve_lambda();
    let width = 22;
    let clause: Vec<_> = (0..width).map(hardmrf_core::sat::Literal::pos).collect();
    let f = CnfFormula::new(width, vec![clause]).unwrap();
    let marking = Marking::new((0..width).map(|v| v % 2 == 0).collect(), lambda);
    assert!(find_marking(&f, lambda, 10_000, 3).unwrap().validate(&f));
    let mut checked = 0;
    for beta in [-0.005, 0.0, 0.005] {
        for i in [0, 9, 21] {
            let pre = flip_preconditions(&f, beta, i, &marking, 38, 0.1).unwrap();
            if pre.holds {
                let fb = verify_flip_bounds(&f, beta, i, &marking).unwrap();
                assert!(fb.p_g >= 0.5, "beta={beta} i={i} p_g={}", fb.p_g);
                checked += 1;
            }
        }
    }
    assert!(checked > 0);
}
