use hardmrf::formats::{
    parse_dimacs, write_dimacs, ConstraintFile, DistributionFile, GraphFile, MarkingFile,
};
use hardmrf_core::coloring::instances::star_instance;
use hardmrf_core::sat::instances::gen_random_satisfiable;
use hardmrf_core::sat::lll::{find_marking, solve_lambda};
use hardmrf_core::{coloring, sat};
use proptest::prelude::*;

proptest! {
    #[test]
    fn dimacs_round_trips(n in 3usize..=12, seed in any::<u64>()) {
        if let Ok(f) = gen_random_satisfiable(n, 3, 3, n, seed) {
            prop_assert_eq!(parse_dimacs(&write_dimacs(&f)).unwrap(), f);
        }
    }
}

#[test]
fn json_files_round_trip() {
    let (g, h) = star_instance(4, 3).unwrap();
    let gf = GraphFile::from_graph(&g);
    let back: GraphFile = serde_json::from_str(&serde_json::to_string(&gf).unwrap()).unwrap();
    assert_eq!(back.to_graph().unwrap(), g);
    let hf = ConstraintFile::from_constraint(&h);
    let back: ConstraintFile = serde_json::from_str(&serde_json::to_string(&hf).unwrap()).unwrap();
    assert_eq!(back.to_constraint().unwrap(), h);
}

#[test]
fn distributions_carry_log_partition() {
    let f = sat::CnfFormula::new(2, vec![vec![sat::Literal::pos(0), sat::Literal::pos(1)]]).unwrap();
    let dist = sat::enumerate_distribution(&f, 0.0).unwrap();
    let file = DistributionFile::from_sat(&dist, 2);
    let text = serde_json::to_string(&file).unwrap();
    assert!(text.contains("\"logZ\""));
    assert_eq!(file.states.len(), 3);
    assert!((file.log_z - 3f64.ln()).abs() < 1e-12);
    assert_eq!(file.states[0].bits.as_deref(), Some("0b10"));

    let (g, h) = star_instance(2, 2).unwrap();
    let dist = coloring::enumerate_distribution(&g, &h, &coloring::BetaVector::zeros(3)).unwrap();
    let file = DistributionFile::from_coloring(&dist, 3, 3);
    assert!(file.states.iter().all(|s| s.colors.as_ref().unwrap().iter().all(|&c| (1..=3).contains(&c))));
}

#[test]
fn marking_round_trip() {
    let f = gen_random_satisfiable(10, 3, 2, 6, 5).unwrap();
    if let Ok(m) = find_marking(&f, solve_lambda(), 10_000, 1) {
        let file = MarkingFile::from_marking(&m);
        assert!(file.marked.iter().all(|&i| (1..=10).contains(&i)));
        assert_eq!(file.to_marking(10).unwrap(), m);
    }
    assert!(MarkingFile { lambda: 0.3, marked: vec![11] }.to_marking(10).is_err());
}
