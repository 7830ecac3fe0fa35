//! Small hand-built instances.

use crate::model::{Instance, Material, Recipe};

/// Three recipes over six materials with one group of alternatives:
///
/// * recipe 1: 1000 of material 1 gives 50 of 2 and 900 of 3
/// * recipe 2: 1000 of material 1 gives 400 of 3 and 600 of 4
/// * recipe 3: 1200 of material 3 plus 300 of any mix of 4 and 5 gives
///   1400 of 6
///
/// Only materials 1 and 5 can be bought. Costs are 1 for material 1 and
/// 100 for everything else; there is no stock and no demand.
pub fn three_recipe_example() -> Instance {
    let materials = (1..=6)
        .map(|k| {
            let cost = if k == 1 { 1.0 } else { 100.0 };
            Material::new(k.to_string()).with_cost(cost)
        })
        .collect();
    let recipes = vec![
        Recipe::new("1").input("1", 1000.0).output("2", 50.0).output("3", 900.0),
        Recipe::new("2").input("1", 1000.0).output("3", 400.0).output("4", 600.0),
        Recipe::new("3")
            .input("3", 1200.0)
            .output("6", 1400.0)
            .alternatives(["4", "5"], 300.0),
    ];
    Instance::load(materials, recipes).expect("example instance is valid")
}

/// Two materials that can only be made from each other, losing 10% on
/// every pass. Nothing can be bought, so any demand is infeasible.
pub fn closed_loop_example(demand: f64) -> Instance {
    let materials = vec![
        Material::new("x").with_cost(1.0),
        Material::new("y").with_cost(1.0).with_demand(demand),
    ];
    let recipes = vec![
        Recipe::new("to_y").input("x", 10.0).output("y", 9.0),
        Recipe::new("to_x").input("y", 10.0).output("x", 9.0),
    ];
    Instance::load(materials, recipes).expect("example instance is valid")
}
