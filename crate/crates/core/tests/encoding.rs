mod common;

use carveopt_core::fixtures::three_recipe_example;
use carveopt_core::solver::{BuiltinBackend, Sense, SolverBackend, SolverOptions, Status};
use carveopt_core::synth::random_small_instance;
use carveopt_core::{
    all_group_keys, big_m_for_moq, big_m_for_mpa, build_base_lp, build_global_model, AltKey, GroupKey,
    Instance, Material, ModelError, PpopModel, Recipe, Scenario, Weights,
};
use common::{enumerate_binaries, num_binaries, rel_close};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Largest violation among a group's rows at the given point, where
/// `assign` lists `(variable index, value)` and all other values are 0.
fn group_violation(model: &PpopModel, key: GroupKey, assign: &[(usize, f64)]) -> f64 {
    let group = model.groups().find(|g| g.key == key).unwrap();
    let mut values = vec![0.0; model.lp.num_variables()];
    for &(v, x) in assign {
        values[v] = x;
    }
    group
        .rows
        .iter()
        .map(|&r| model.lp.constraints()[r].violation(&values))
        .fold(0.0, f64::max)
}

fn assembly_key(inst: &Instance, member: &str) -> AltKey {
    AltKey {
        recipe: 2,
        group: 0,
        material: inst.material_index(member).unwrap(),
    }
}

#[test]
fn big_m_falls_back_without_a_usage_bound() {
    let s = Scenario::new(three_recipe_example()).unwrap().with_moq(Some(100.0));
    assert_eq!(big_m_for_moq(&s, 0), 1e7);
    assert_eq!(big_m_for_mpa(&s, assembly_key(&s.instance, "4")), 1e7);
}

#[test]
fn big_m_never_undercuts_the_threshold() {
    let s = Scenario::new(three_recipe_example()).unwrap().with_moq(Some(2e7));
    assert_eq!(big_m_for_moq(&s, 0), 2e7);
    assert_eq!(big_m_for_moq(&s, 4), 2e7);
}

/// Material "a" is bought (MOQ 100) for demand 200 plus a pinned recipe
/// that uses 300 per level, so no plan needs more than 500.
fn closed_toy() -> Scenario {
    let inst = Instance::load(
        vec![
            Material::new("a").with_cost(2.0).with_demand(200.0).with_moq(100.0),
            Material::new("b").with_cost(5.0).with_demand(30.0),
        ],
        vec![Recipe::new("r").input("a", 300.0).output("b", 70.0)],
    )
    .unwrap();
    Scenario::new(inst)
        .unwrap()
        .with_fixed_level("r", 1.0)
        .with_weights(Weights([1.0, 1.0, 0.0, 0.0, 0.0]))
}

#[test]
fn derived_big_m_keeps_the_optimum() {
    let s = closed_toy();
    assert_eq!(big_m_for_moq(&s, 0), 500.0);
    let tight = build_global_model(&s).unwrap();
    let tight_out = BuiltinBackend.solve(&tight.lp, &SolverOptions::default()).unwrap();

    // Same model with the fallback constant written out by hand.
    let mut loose = build_base_lp(&s).unwrap();
    let (b, m) = (loose.vars.buy[0], 1e7);
    let v = loose.lp.add_binary("v");
    loose.lp.add_constraint("on", [(b, 1.0), (v, -m)], Sense::Le, 0.0);
    loose.lp.add_constraint("min", [(b, 1.0), (v, -m)], Sense::Ge, 100.0 - m);
    let loose_out = BuiltinBackend.solve(&loose.lp, &SolverOptions::default()).unwrap();

    assert_eq!(tight_out.status, Status::Optimal);
    assert_eq!(loose_out.status, Status::Optimal);
    assert!(rel_close(tight_out.objective.unwrap(), loose_out.objective.unwrap(), 1e-9));
    assert!(rel_close(tight_out.objective.unwrap(), enumerate_binaries(&tight.lp).unwrap(), 1e-9));
}

#[test]
fn moq_rows_exclude_small_purchases() {
    let s = Scenario::new(three_recipe_example()).unwrap().with_moq(Some(100.0));
    let mut model = build_base_lp(&s).unwrap();
    let group = model.add_moq_group(&s, 0).unwrap().clone();
    let (b, v) = (model.vars.buy[0].index(), group.binary.index());
    let key = GroupKey::Moq(0);
    for on in [0.0, 1.0] {
        assert!(group_violation(&model, key, &[(b, 50.0), (v, on)]) > 1e-3, "b=50 v={on}");
    }
    assert_eq!(group_violation(&model, key, &[(b, 0.0), (v, 0.0)]), 0.0);
    assert_eq!(group_violation(&model, key, &[(b, 100.0), (v, 1.0)]), 0.0);
}

#[test]
fn mpa_rows_exclude_a_two_percent_share() {
    let s = Scenario::new(three_recipe_example()).unwrap();
    let mut model = build_base_lp(&s).unwrap();
    let k4 = assembly_key(&s.instance, "4");
    let group = model.add_mpa_group(&s, k4).unwrap().clone();
    let (z, zh, v) = (model.vars.z[2].index(), model.vars.z_hat[&k4].index(), group.binary.index());
    let key = GroupKey::Mpa(k4);
    // Mix (6, 294) of materials 4 and 5 at level 1: material 4 is 2%.
    for on in [0.0, 1.0] {
        assert!(group_violation(&model, key, &[(z, 1.0), (zh, 6.0 / 300.0), (v, on)]) > 1e-4);
    }
    assert_eq!(group_violation(&model, key, &[(z, 1.0), (zh, 0.0), (v, 0.0)]), 0.0);
    assert_eq!(group_violation(&model, key, &[(z, 1.0), (zh, 0.05), (v, 1.0)]), 0.0);
}

#[test]
fn groups_are_added_once() {
    let s = Scenario::new(three_recipe_example()).unwrap().with_moq(Some(100.0));
    let mut model = build_base_lp(&s).unwrap();
    model.add_moq_group(&s, 0).unwrap();
    assert!(matches!(model.add_moq_group(&s, 0), Err(ModelError::DuplicateGroup(_))));
    let k5 = assembly_key(&s.instance, "5");
    model.add_group(&s, GroupKey::Mpa(k5)).unwrap();
    assert!(matches!(model.add_group(&s, GroupKey::Mpa(k5)), Err(ModelError::DuplicateGroup(_))));
    assert_eq!(model.num_groups(), 2);
}

#[test]
fn zero_moq_leaves_only_alternative_groups() {
    let s = Scenario::new(three_recipe_example()).unwrap().with_moq(Some(0.0));
    let model = build_global_model(&s).unwrap();
    assert_eq!(model.num_groups(), 2);
    assert!(model.groups().all(|g| matches!(g.key, GroupKey::Mpa(_))));
}

#[test]
fn global_model_has_one_binary_per_group() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let inst = random_small_instance(&mut rng);
        let s = Scenario::new(inst).unwrap();
        let with_moq = (0..s.instance.num_materials())
            .filter(|&i| s.instance.is_purchasable(i) && s.instance.material(i).moq > 0.0)
            .count();
        let members: usize = s
            .instance
            .recipes()
            .iter()
            .flat_map(|r| &r.alt_groups)
            .map(|g| g.members.len())
            .sum();
        let model = build_global_model(&s).unwrap();
        assert_eq!(num_binaries(&model.lp), with_moq + members);
        assert_eq!(all_group_keys(&s).len(), with_moq + members);
    }
}

#[test]
fn one_recipe_toy_matches_enumeration() {
    let inst = Instance::load(
        vec![
            Material::new("x").with_cost(1.0).with_moq(80.0),
            Material::new("y").with_cost(3.0).with_moq(30.0),
            Material::new("out").with_demand(10.0),
        ],
        vec![Recipe::new("mix").alternatives(["x", "y"], 4.0).output("out", 1.0)],
    )
    .unwrap();
    for w in [Weights::COST_ONLY, Weights([1.0, 1.0, 0.0, 0.0, 0.0]), Weights::PLANNING] {
        let s = Scenario::new(inst.clone()).unwrap().with_weights(w);
        let model = build_global_model(&s).unwrap();
        assert_eq!(num_binaries(&model.lp), 4);
        let out = BuiltinBackend.solve(&model.lp, &SolverOptions::default()).unwrap();
        assert_eq!(out.status, Status::Optimal);
        let oracle = enumerate_binaries(&model.lp).unwrap();
        assert!(rel_close(out.objective.unwrap(), oracle, 1e-9), "{:?} vs {oracle}", out.objective);
    }
}
