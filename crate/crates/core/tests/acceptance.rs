//! One line per acceptance criterion. Exits non-zero if any fails.

mod common;

use std::time::{Duration, Instant};

use carveopt_core::fixtures::three_recipe_example;
use carveopt_core::lab::{hog_sweep, sample_demand, weight_sweep};
use carveopt_core::reductions::{brute_force_independent_set, reduce_is_moq, reduce_is_mpa, Graph};
use carveopt_core::solver::{BuiltinBackend, SolverBackend, SolverOptions, Status};
use carveopt_core::synth::{random_small_instance, scale_instance, ScaleParams};
use carveopt_core::{
    build_base_lp, envelope, extract_solution, pwl_breakpoints, pwl_cuts, recipe_flows, satisfies_disjunctions,
    solve, solve_iterative, Instance, Material, Method, Recipe, Scenario, StockBatch, Weights,
    DEFAULT_EXPONENT_SCALE,
};
use common::{monotone, oracle_case, rel_close, suite_scenario};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SUITE_SIZE: usize = 200;
const SUITE_SEED: u64 = 20_240_601;
const OBJECTIVE_TOL: f64 = 1e-6;
const REDUCTION_TOL: f64 = 1e-4;
const FLOW_TOL: f64 = 1e-12;
const PWL_TOL: f64 = 1e-12;
const R_SUM_TOL: f64 = 1e-9;
const T_TOL: f64 = 1e-6;
const CONVEXITY_TOL: f64 = 1e-6;
const SCALE_BUDGET: Duration = Duration::from_secs(60);
const SAMPLES: usize = 100_000;
const MEAN_TOL: f64 = 0.02;

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn oracle_equivalence_and_bounds() -> (Outcome, Outcome) {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    let start = Instant::now();
    let (mut optimal, mut enumerated) = (0, 0);
    let mut equivalence = Vec::new();
    let mut bounds = Vec::new();
    for case in 0..SUITE_SIZE {
        let s = suite_scenario(&mut rng);
        let c = oracle_case(&s);
        if c.iterative.status != c.global.status {
            equivalence.push(format!("case {case}: {:?} vs {:?}", c.iterative.status, c.global.status));
            continue;
        }
        if c.iterative.status != Status::Optimal {
            continue;
        }
        optimal += 1;
        let (fi, fg) = (c.iterative.objective().unwrap(), c.global.objective().unwrap());
        if !rel_close(fi, fg, OBJECTIVE_TOL) {
            equivalence.push(format!("case {case}: iterative {fi} global {fg}"));
        }
        if let Some(oracle) = c.enumerated {
            enumerated += 1;
            if !oracle.is_some_and(|o| rel_close(fi, o, OBJECTIVE_TOL)) {
                equivalence.push(format!("case {case}: iterative {fi} enumeration {oracle:?}"));
            }
        }
        if c.iterative.iterations > c.iteration_bound {
            bounds.push(format!("case {case}: {} > {}", c.iterative.iterations, c.iteration_bound));
        }
        if !monotone(&c.iterative) {
            bounds.push(format!("case {case}: objective decreased"));
        }
        for report in [&c.iterative, &c.global] {
            if !satisfies_disjunctions(&s, report.solution.as_ref().unwrap()) {
                bounds.push(format!("case {case}: disjunction violated"));
            }
        }
    }
    let summary = format!(
        "{SUITE_SIZE} instances, {optimal} optimal, {enumerated} enumerated, {:.1}s",
        start.elapsed().as_secs_f64()
    );
    let fold = |errors: Vec<String>| match errors.first() {
        None => Ok(summary.clone()),
        Some(e) => Err(format!("{} failures, first: {e}", errors.len())),
    };
    let mut equivalence_out = fold(equivalence);
    if enumerated == 0 {
        equivalence_out = Err("no instance small enough to enumerate".into());
    }
    (equivalence_out, fold(bounds))
}

fn attains(scenario: &Scenario, target: f64) -> Result<bool, String> {
    let report = solve(scenario, Method::Iterative).map_err(|e| e.to_string())?;
    match report.status {
        Status::Optimal => Ok(report.objective().unwrap() <= target * (1.0 + REDUCTION_TOL)),
        Status::Infeasible => Ok(false),
        other => Err(format!("status {other:?}")),
    }
}

fn all_graphs(max_n: usize) -> impl Iterator<Item = Graph> {
    (1..=max_n).flat_map(|n| {
        let pairs = n * (n - 1) / 2;
        (0..1u64 << pairs).map(move |mask| Graph::from_pair_mask(n, mask))
    })
}

type Reduction = fn(&Graph, usize) -> Result<(Scenario, f64), carveopt_core::ModelError>;

fn reduction_theorem() -> Outcome {
    let start = Instant::now();
    let mut checked = 0;
    let cases: [(&str, Reduction, usize); 2] = [("moq", reduce_is_moq, 5), ("mpa", reduce_is_mpa, 5)];
    for (name, reduce, max_n) in cases {
        for g in all_graphs(max_n) {
            for k in 1..=5 {
                let expected = brute_force_independent_set(&g, k).unwrap();
                // Without k vertices there is no set, and no scenario to build.
                let attained = match reduce(&g, k) {
                    Ok((scenario, target)) => attains(&scenario, target),
                    Err(_) if k > g.num_vertices() => Ok(false),
                    Err(e) => Err(e.to_string()),
                };
                match attained {
                    Ok(a) if a == expected => checked += 1,
                    Ok(a) => {
                        return Err(format!("{name}: graph {:?} k={k}: attained {a}, expected {expected}", g.edges()))
                    }
                    Err(e) => return Err(format!("{name}: graph {:?} k={k}: {e}", g.edges())),
                }
            }
        }
    }
    Ok(format!("{checked} (graph, k) pairs, {:.1}s", start.elapsed().as_secs_f64()))
}

fn worked_example_flows() -> Outcome {
    let inst = three_recipe_example();
    let (m3, m4, m5, m6) = (2, 3, 4, 5);
    let flows = recipe_flows(&inst, 2, 0.5, &[(0, m4, 1.0 / 3.0), (0, m5, 1.0 / 6.0)]);
    let amount = |list: &[(usize, f64)], m: usize| list.iter().find(|f| f.0 == m).map(|f| f.1);
    let got = [
        amount(&flows.inputs, m3),
        amount(&flows.outputs, m6),
        amount(&flows.inputs, m4),
        amount(&flows.inputs, m5),
    ];
    let want = [600.0, 700.0, 100.0, 50.0];
    let ok = got.iter().zip(want).all(|(g, w)| g.is_some_and(|g| (g - w).abs() <= FLOW_TOL));
    check(ok, format!("flows {got:?}, expected {want:?}"))
}

fn pwl_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for list in 0..1000 {
        let count = rng.random_range(1..=8);
        let mut material = Material::new("x");
        for _ in 0..count {
            material = material.with_batch(rng.random_range(0.01..1000.0), f64::from(rng.random_range(0..20_000u32)));
        }
        let batches: Vec<StockBatch> = Instance::load(vec![material], vec![]).unwrap().material(0).batches.clone();
        let bp = pwl_breakpoints(&batches, DEFAULT_EXPONENT_SCALE);
        if bp.slopes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(format!("list {list}: slopes not strictly increasing"));
        }
        let cuts = pwl_cuts(&bp);
        let h: f64 = batches.iter().map(|b| b.quantity).sum();
        for _ in 0..100 {
            let s = rng.random_range(0.0..=h);
            let (e, i) = (envelope(&cuts, s), bp.evaluate(s));
            if (e - i).abs() > PWL_TOL * i.abs().max(1.0) {
                return Err(format!("list {list}: envelope {e} vs interpolation {i} at {s}"));
            }
        }
    }

    let mut checked = 0;
    for _ in 0..200 {
        let inst = random_small_instance(&mut rng);
        if inst.materials().iter().all(|m| m.batches.is_empty()) {
            continue;
        }
        let s = Scenario::new(inst).unwrap().with_weights(Weights([1.0, 1.0, 1.0, 1.0, 5.0]));
        let model = build_base_lp(&s).unwrap();
        let out = BuiltinBackend.solve(&model.lp, &SolverOptions::default()).unwrap();
        let Some(values) = out.values.filter(|_| out.status == Status::Optimal) else {
            continue;
        };
        let sol = extract_solution(&s, &model, &values);
        let direct: f64 = (0..s.instance.num_materials())
            .map(|i| {
                let bp = pwl_breakpoints(&s.instance.material(i).batches, DEFAULT_EXPONENT_SCALE);
                bp.evaluate(sol.stock_old[i])
            })
            .sum();
        let r_sum: f64 = sol.pwl_value.iter().sum();
        if (r_sum - direct).abs() > R_SUM_TOL * direct.abs().max(1.0) {
            return Err(format!("sum of r {r_sum} vs direct f4 {direct}"));
        }
        checked += 1;
    }
    check(checked >= 50, format!("1000 lists x 100 points, {checked} LP optima"))
}

fn sweep_semantics() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut worst_t = f64::INFINITY;
    let mut sweeps = 0;
    for _ in 0..20 {
        let mut s = Scenario::new(random_small_instance(&mut rng)).unwrap();
        s.solver_options.relative_gap = 1e-10;
        let Ok(rows) = weight_sweep(&s, &Weights::presets()) else {
            continue;
        };
        sweeps += 1;
        for t in rows.iter().flat_map(|r| r.t.iter().flatten()) {
            worst_t = worst_t.min(*t);
        }
    }
    if sweeps < 5 || worst_t < -T_TOL {
        return Err(format!("{sweeps} weight sweeps, min t {worst_t}"));
    }

    let mut s = Scenario::new(demand_on_product(700.0)).unwrap().with_moq(Some(100.0));
    s.solver_options.relative_gap = 1e-10;
    let free = solve_iterative(&s).unwrap().objective().unwrap();
    let levels: Vec<f64> = (0..=8).map(|k| k as f64 * 0.25).collect();
    for recipe in ["1", "2", "3"] {
        for row in hog_sweep(&s, recipe, &levels).unwrap() {
            if row.objective.is_some_and(|f| f < free * (1.0 - 1e-9)) {
                return Err(format!("pinning {recipe} at {} beats the free optimum", row.key));
            }
        }
    }

    let lp = pure_lp();
    let levels: Vec<f64> = (12..=72).map(|k| k as f64 * 0.25).collect();
    let f: Vec<Option<f64>> = hog_sweep(&lp, "split", &levels).unwrap().iter().map(|r| r.objective).collect();
    for w in f.windows(3) {
        let [Some(a), Some(b), Some(c)] = [w[0], w[1], w[2]] else {
            return Err("pure LP hog sweep has a non-optimal row".into());
        };
        if b > 0.5 * (a + c) + CONVEXITY_TOL * b.abs().max(1.0) {
            return Err(format!("midpoint convexity fails at {a}, {b}, {c}"));
        }
    }
    Ok(format!("{sweeps} weight sweeps (min t {worst_t:.2e}), 27 pinned rows, {} convexity triples", f.len() - 2))
}

fn demand_on_product(d: f64) -> Instance {
    let base = three_recipe_example();
    let mut materials = base.materials().to_vec();
    materials[5] = materials[5].clone().with_demand(d);
    Instance::load(materials, base.recipes().to_vec()).unwrap()
}

fn pure_lp() -> Scenario {
    let inst = Instance::load(
        vec![
            Material::new("raw").with_cost(2.0).with_batch(20.0, 4000.0),
            Material::new("mid").with_demand(3.0),
            Material::new("product").with_demand(10.0),
        ],
        vec![
            Recipe::new("split").input("raw", 2.0).output("mid", 1.0).output("product", 1.0),
            Recipe::new("direct").input("raw", 3.0).output("product", 1.0),
        ],
    )
    .unwrap();
    Scenario::new(inst).unwrap().with_moq(Some(0.0))
}

fn scale() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let params = ScaleParams::default();
    let inst = scale_instance(&mut rng, params);
    let demands = inst.materials().iter().filter(|m| m.demand > 0.0).count();
    let s = Scenario::new(inst).unwrap().with_weights(Weights::PLANNING).with_moq(Some(100.0));
    let start = Instant::now();
    let report = solve_iterative(&s).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed();
    let detail = format!(
        "{} materials, {} recipes, {demands} demands: {:?} in {:.1}s, {} iterations",
        s.instance.num_materials(),
        s.instance.num_recipes(),
        report.status,
        elapsed.as_secs_f64(),
        report.iterations
    );
    check(report.status == Status::Optimal && report.feasible_for_full && elapsed <= SCALE_BUDGET, detail)
}

fn triangular_sampler() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let samples: Vec<f64> = (0..SAMPLES).map(|_| sample_demand(1.0, &mut rng)).collect();
    let (lo, hi) = samples.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    let mean = samples.iter().sum::<f64>() / SAMPLES as f64;
    check(
        lo >= 0.1 && hi <= 5.0 && (mean - 61.0 / 30.0).abs() <= MEAN_TOL,
        format!("range [{lo:.4}, {hi:.4}], mean {mean:.4}"),
    )
}

fn main() {
    let (equivalence, bounds) = oracle_equivalence_and_bounds();
    let results = [
        ("oracle equivalence", equivalence),
        ("reduction theorem", reduction_theorem()),
        ("worked example flows", worked_example_flows()),
        ("pwl correctness", pwl_correctness()),
        ("iterative bounds", bounds),
        ("sweep semantics", sweep_semantics()),
        ("scale", scale()),
        ("triangular sampler", triangular_sampler()),
    ];
    let mut failed = 0;
    for (name, outcome) in &results {
        match outcome {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL {name}: {detail}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
