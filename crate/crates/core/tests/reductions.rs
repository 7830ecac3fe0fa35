use carveopt_core::reductions::{brute_force_independent_set, reduce_is_moq, reduce_is_mpa, Graph};
use carveopt_core::{solve, Method, Scenario};
use carveopt_core::solver::Status;

fn attains(scenario: &Scenario, target: f64) -> bool {
    let report = solve(scenario, Method::Iterative).unwrap();
    match report.status {
        Status::Optimal => report.objective().unwrap() <= target + 1e-4 * target.max(1.0),
        Status::Infeasible => false,
        other => panic!("unexpected status {other:?}"),
    }
}

fn all_graphs(max_n: usize) -> impl Iterator<Item = Graph> {
    (1..=max_n).flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (0..1u64 << pairs).map(move |mask| Graph::from_pair_mask(n, mask))
    })
}

#[test]
fn moq_reduction_matches_exhaustive_search() {
    for g in all_graphs(4) {
        for k in 1..=g.num_vertices() {
            let expected = brute_force_independent_set(&g, k).unwrap();
            let (scenario, target) = reduce_is_moq(&g, k).unwrap();
            assert_eq!(attains(&scenario, target), expected, "graph {:?} k={k}", g.edges());
        }
    }
}

#[test]
fn mpa_reduction_matches_exhaustive_search() {
    for g in all_graphs(4) {
        for k in 1..=g.num_vertices() {
            let expected = brute_force_independent_set(&g, k).unwrap();
            let (scenario, target) = reduce_is_mpa(&g, k).unwrap();
            assert_eq!(attains(&scenario, target), expected, "graph {:?} k={k}", g.edges());
        }
    }
}
