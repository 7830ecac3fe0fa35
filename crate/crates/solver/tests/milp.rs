use carveopt_solver::{
    BuiltinBackend, LinearProgram, Sense, SolverBackend, SolverOptions, Status, VarId,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn solve(lp: &LinearProgram) -> carveopt_solver::SolveOutcome {
    BuiltinBackend.solve(lp, &SolverOptions::default()).unwrap()
}

/// Pure binary program with random rows.
fn random_binary_program(rng: &mut impl Rng, k: usize) -> LinearProgram {
    let mut lp = LinearProgram::new();
    let vars: Vec<VarId> = (0..k).map(|j| lp.add_binary(format!("v{j}"))).collect();
    for &v in &vars {
        lp.set_objective(v, rng.random_range(-10..10) as f64);
    }
    for r in 0..rng.random_range(1..5) {
        let mut terms = Vec::new();
        for &v in &vars {
            if rng.random_bool(0.6) {
                terms.push((v, rng.random_range(-6..7) as f64));
            }
        }
        let sense = if rng.random_bool(0.5) { Sense::Le } else { Sense::Ge };
        let rhs = rng.random_range(-4..5) as f64;
        lp.add_constraint(format!("r{r}"), terms, sense, rhs);
    }
    lp
}

fn enumerate(lp: &LinearProgram) -> Option<f64> {
    let k = lp.num_variables();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << k) {
        let x: Vec<f64> = (0..k).map(|j| ((mask >> j) & 1) as f64).collect();
        if lp.max_violation(&x) <= 1e-9 {
            let obj = lp.objective_value(&x);
            if best.is_none_or(|b| obj < b) {
                best = Some(obj);
            }
        }
    }
    best
}

#[test]
fn pure_binary_programs_match_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let k = rng.random_range(1..=10);
        let lp = random_binary_program(&mut rng, k);
        let out = solve(&lp);
        match enumerate(&lp) {
            None => assert_eq!(out.status, Status::Infeasible),
            Some(best) => {
                assert_eq!(out.status, Status::Optimal);
                assert!((out.objective.unwrap() - best).abs() < 1e-6);
                let x = out.values.unwrap();
                assert!(x.iter().all(|v| *v == 0.0 || *v == 1.0));
            }
        }
    }
}

/// Fixed-charge supply: each of `k` sources has an opening binary and a
/// capacity linked through a big-M row; demand must be met.
fn fixed_charge(rng: &mut impl Rng, k: usize) -> (LinearProgram, Vec<f64>, Vec<f64>, Vec<f64>, f64) {
    let mut lp = LinearProgram::new();
    let demand = rng.random_range(10.0..100.0);
    let mut fixed = Vec::new();
    let mut unit = Vec::new();
    let mut minimum = Vec::new();
    let mut flows = Vec::new();
    for j in 0..k {
        let f = lp.add_continuous(format!("f{j}"), 0.0, f64::INFINITY);
        let o = lp.add_binary(format!("o{j}"));
        let (fc, uc, mq) = (
            rng.random_range(0.0..50.0),
            rng.random_range(1.0..5.0),
            rng.random_range(0.0..40.0),
        );
        lp.set_objective(f, uc);
        lp.set_objective(o, fc);
        lp.add_constraint(format!("cap{j}"), [(f, 1.0), (o, -1e4)], Sense::Le, 0.0);
        lp.add_constraint(format!("min{j}"), [(f, 1.0), (o, -mq)], Sense::Ge, 0.0);
        fixed.push(fc);
        unit.push(uc);
        minimum.push(mq);
        flows.push(f);
    }
    lp.add_constraint("demand", flows.iter().map(|&f| (f, 1.0)), Sense::Ge, demand);
    (lp, fixed, unit, minimum, demand)
}

/// For a fixed set of open sources the cheapest plan fills the minimum
/// quantities and puts the remainder on the cheapest open source.
fn fixed_charge_oracle(fixed: &[f64], unit: &[f64], minimum: &[f64], demand: f64) -> f64 {
    let k = fixed.len();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << k) {
        let open: Vec<usize> = (0..k).filter(|j| (mask >> j) & 1 == 1).collect();
        let base: f64 = open.iter().map(|&j| fixed[j] + unit[j] * minimum[j]).sum();
        let filled: f64 = open.iter().map(|&j| minimum[j]).sum();
        let cheapest = open.iter().map(|&j| unit[j]).fold(f64::INFINITY, f64::min);
        let cost = base + cheapest * (demand - filled).max(0.0);
        best = best.min(cost);
    }
    best
}

#[test]
fn fixed_charge_matches_closed_form_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    for _ in 0..60 {
        let k = rng.random_range(1..=6);
        let (lp, fixed, unit, minimum, demand) = fixed_charge(&mut rng, k);
        let out = solve(&lp);
        assert_eq!(out.status, Status::Optimal);
        let best = fixed_charge_oracle(&fixed, &unit, &minimum, demand);
        assert!(
            (out.objective.unwrap() - best).abs() <= 1e-6 * (1.0 + best.abs()),
            "{} vs {best}",
            out.objective.unwrap()
        );
        let x = out.values.unwrap();
        assert!(lp.max_violation(&x) < 1e-6);
    }
}

/// Costless switches behind a huge big-M: the relaxation sets every binary
/// to a tiny fraction, so the search relies on polishing and must still
/// stay within the complete binary tree.
#[test]
fn weak_big_m_search_stays_within_the_binary_tree() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    for _ in 0..40 {
        let k = rng.random_range(1..=5);
        let mut lp = LinearProgram::new();
        let mut flows = Vec::new();
        let mut minimum = Vec::new();
        let mut unit = Vec::new();
        for j in 0..k {
            let f = lp.add_continuous(format!("f{j}"), 0.0, f64::INFINITY);
            let o = lp.add_binary(format!("o{j}"));
            let (uc, mq) = (rng.random_range(1.0..5.0), rng.random_range(20.0..120.0));
            lp.set_objective(f, uc);
            lp.add_constraint(format!("cap{j}"), [(f, 1.0), (o, -1e7)], Sense::Le, 0.0);
            lp.add_constraint(format!("min{j}"), [(f, 1.0), (o, -1e7)], Sense::Ge, mq - 1e7);
            flows.push(f);
            minimum.push(mq);
            unit.push(uc);
        }
        let demand = rng.random_range(10.0..100.0);
        lp.add_constraint("demand", flows.iter().map(|&f| (f, 1.0)), Sense::Ge, demand);
        let out = solve(&lp);
        assert_eq!(out.status, Status::Optimal);
        let best = fixed_charge_oracle(&vec![0.0; k], &unit, &minimum, demand);
        assert!((out.objective.unwrap() - best).abs() <= 1e-6 * (1.0 + best), "{:?} vs {best}", out.objective);
        assert!(out.stats.nodes < 1 << (k + 1), "{} nodes for {k} binaries", out.stats.nodes);
        let x = out.values.unwrap();
        for v in lp.binaries() {
            let xv = x[v.index()];
            assert!(xv == 0.0 || xv == 1.0, "binary at {xv}");
        }
        assert!(lp.max_violation(&x) < 1e-6);
    }
}

#[test]
fn incumbents_improve_monotonically() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..20 {
        let lp = random_binary_program(&mut rng, 10);
        let out = solve(&lp);
        let inc = &out.stats.incumbents;
        assert!(inc.windows(2).all(|w| w[1] < w[0]));
        if let Some(obj) = out.objective {
            assert_eq!(*inc.last().unwrap(), obj);
            assert_eq!(out.stats.best_bound, Some(obj));
        }
    }
}

#[test]
fn node_limit_returns_best_incumbent() {
    let mut rng = ChaCha8Rng::seed_from_u64(29);
    let (lp, ..) = fixed_charge(&mut rng, 12);
    let opts = SolverOptions {
        node_limit: Some(3),
        ..SolverOptions::default()
    };
    let out = BuiltinBackend.solve(&lp, &opts).unwrap();
    assert!(out.stats.nodes <= 3);
    assert!(matches!(out.status, Status::NodeLimit | Status::Optimal));
    if out.status == Status::NodeLimit {
        if let (Some(bound), Some(obj)) = (out.stats.best_bound, out.objective) {
            assert!(bound <= obj + 1e-9);
        }
    }
}

#[test]
fn infeasible_binary_program() {
    let mut lp = LinearProgram::new();
    let a = lp.add_binary("a");
    let b = lp.add_binary("b");
    lp.add_constraint("odd", [(a, 2.0), (b, 2.0)], Sense::Eq, 1.0);
    assert_eq!(solve(&lp).status, Status::Infeasible);
}

#[test]
fn relaxation_keeps_bounds_and_drops_integrality() {
    let mut lp = LinearProgram::new();
    let a = lp.add_binary("a");
    let b = lp.add_binary("b");
    lp.set_objective(a, -1.0);
    lp.set_objective(b, -1.0);
    lp.add_constraint("half", [(a, 2.0), (b, 2.0)], Sense::Le, 3.0);
    let relaxed = lp.relaxed();
    assert!(!relaxed.has_binaries());
    assert!((solve(&relaxed).objective.unwrap() + 1.5).abs() < 1e-9);
    assert!((solve(&lp).objective.unwrap() + 1.0).abs() < 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn milp_optimum_never_beats_relaxation(seed in any::<u64>(), k in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lp, ..) = fixed_charge(&mut rng, k);
        let milp = solve(&lp).objective.unwrap();
        let lp_bound = solve(&lp.relaxed()).objective.unwrap();
        prop_assert!(lp_bound <= milp + 1e-6 * (1.0 + milp.abs()));
    }
}
