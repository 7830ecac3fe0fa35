//! Seeded instance generators for tests and benchmarks.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

use crate::model::{Instance, Material, Recipe};

/// Small random instance: at most 15 materials, 10 recipes and 3 groups of
/// alternatives, with MOQs drawn from {0, 50, 100} on purchasable
/// materials. Every material is obtainable, so demands can always be met.
pub fn random_small_instance<R: Rng + ?Sized>(rng: &mut R) -> Instance {
    let nm = rng.random_range(4..=15usize);
    let nraw = rng.random_range(1..=3usize.min(nm - 1));
    let nr = rng.random_range(1..=10usize);
    let mut groups_left = rng.random_range(0..=3usize);

    let mut recipes = Vec::with_capacity(nr);
    for j in 0..nr {
        let first_out = rng.random_range(nraw..nm);
        let mut recipe = Recipe::new(format!("r{j}"));
        let mut used: Vec<usize> = Vec::new();
        let ninputs = rng.random_range(1..=2usize.min(first_out));
        for _ in 0..ninputs {
            let i = rng.random_range(0..first_out);
            if !used.contains(&i) {
                used.push(i);
                recipe = recipe.input(m(i), rng.random_range(1..=10) as f64);
            }
        }
        recipe = recipe.output(m(first_out), rng.random_range(1..=10) as f64);
        if first_out + 1 < nm && rng.random_bool(0.3) {
            let extra = rng.random_range(first_out + 1..nm);
            recipe = recipe.output(m(extra), rng.random_range(1..=10) as f64);
        }
        if groups_left > 0 && rng.random_bool(0.4) {
            let candidates: Vec<usize> = (0..first_out).filter(|i| !used.contains(i)).collect();
            if candidates.len() >= 2 {
                let size = rng.random_range(2..=3usize.min(candidates.len()));
                let members: Vec<String> = candidates.choose_multiple(rng, size).map(|&i| m(i)).collect();
                recipe = recipe.alternatives(members, rng.random_range(1..=10) as f64);
                groups_left -= 1;
            }
        }
        recipes.push(recipe);
    }

    let produced: Vec<bool> = (0..nm)
        .map(|i| recipes.iter().any(|r| r.outputs.iter().any(|f| f.material == m(i))))
        .collect();
    let materials = (0..nm)
        .map(|i| {
            let mut mat = Material::new(m(i)).with_cost(rng.random_range(1..=100) as f64);
            mat.turnover = rng.random_range(0.0..10_000.0f64).round();
            mat.shelf_life = rng.random_range(0.0..10_000.0f64).round();
            if rng.random_bool(0.4) {
                mat = mat.with_demand(rng.random_range(1..=200) as f64);
            }
            if rng.random_bool(0.3) {
                for _ in 0..rng.random_range(1..=3) {
                    mat = mat.with_batch(
                        rng.random_range(1..=50) as f64,
                        rng.random_range(0.0..10_000.0f64).round(),
                    );
                }
            }
            if !produced[i] {
                mat = mat.with_moq(*[0.0, 50.0, 100.0].choose(rng).expect("nonempty"));
            }
            mat
        })
        .collect();
    Instance::load(materials, recipes).expect("generated instance is valid")
}

fn m(i: usize) -> String {
    format!("m{i}")
}

/// Dimensions of the layered scale instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScaleParams {
    pub materials: usize,
    pub raw: usize,
    pub recipes: usize,
    pub stocked: usize,
    pub demands: usize,
    /// Recipes with a group of alternatives.
    pub assemblies: usize,
}

impl Default for ScaleParams {
    fn default() -> Self {
        Self {
            materials: 1130,
            raw: 130,
            recipes: 1131,
            stocked: 42,
            demands: 300,
            assemblies: 30,
        }
    }
}

/// Layered cutting instance: raw materials are split into three layers of
/// cuts, each produced by a pattern that also yields co-products from the
/// same layer. A few assembly recipes mix members of a group of
/// alternatives. Demands sit on the last layer.
pub fn scale_instance<R: Rng + ?Sized>(rng: &mut R, params: ScaleParams) -> Instance {
    let produced = params.materials - params.raw;
    assert!(params.recipes >= produced, "every non-raw material needs a recipe");
    let l1 = produced * 3 / 10;
    let l2 = produced * 4 / 10;
    let l3 = produced - l1 - l2;
    assert!(params.demands <= l3, "demands must fit on the last layer");

    // Index ranges per layer; layer 0 is raw.
    let bounds = [
        0..params.raw,
        params.raw..params.raw + l1,
        params.raw + l1..params.raw + l1 + l2,
        params.raw + l1 + l2..params.materials,
    ];
    let layer_of = |i: usize| bounds.iter().position(|b| b.contains(&i)).expect("index in range");
    let id = |i: usize| {
        if i < params.raw {
            format!("raw{i}")
        } else {
            format!("cut{}", i - params.raw)
        }
    };

    let mut recipes = Vec::with_capacity(params.recipes);
    let pattern = |rng: &mut R, name: String, main: usize| {
        let layer = layer_of(main);
        let parent = rng.random_range(bounds[layer - 1].clone());
        let mut outs = vec![main];
        for _ in 0..rng.random_range(1..=3) {
            let o = rng.random_range(bounds[layer].clone());
            if !outs.contains(&o) {
                outs.push(o);
            }
        }
        let yield_total = rng.random_range(80.0..95.0f64);
        let mut shares: Vec<f64> = outs.iter().map(|_| rng.random_range(1.0..3.0f64)).collect();
        let sum: f64 = shares.iter().sum();
        shares.iter_mut().for_each(|s| *s = (*s / sum * yield_total * 100.0).round() / 100.0);
        let mut recipe = Recipe::new(name).input(id(parent), 100.0);
        for (&o, &q) in outs.iter().zip(&shares) {
            recipe = recipe.output(id(o), q);
        }
        recipe
    };
    let mut mains: Vec<usize> = (params.raw..params.materials).collect();
    mains.shuffle(rng);
    for (j, &main) in mains.iter().enumerate() {
        recipes.push(pattern(rng, format!("p{j}"), main));
    }
    let extra = params.recipes - produced;
    for j in 0..extra {
        let name = format!("p{}", produced + j);
        if j < params.assemblies {
            // Assembly: a base cut plus a mix of 2-3 interchangeable cuts.
            let out = rng.random_range(bounds[3].clone());
            let base = rng.random_range(bounds[2].clone());
            let mut pool: Vec<usize> = bounds[2].clone().filter(|&i| i != base).collect();
            pool.shuffle(rng);
            let size = rng.random_range(2..=3);
            let members: Vec<String> = pool[..size].iter().map(|&i| id(i)).collect();
            let total = rng.random_range(10..=40) as f64;
            let base_qty = rng.random_range(40..=80) as f64;
            recipes.push(
                Recipe::new(name)
                    .input(id(base), base_qty)
                    .alternatives(members, total)
                    .output(id(out), ((base_qty + total) * 0.95).round()),
            );
        } else {
            let main = rng.random_range(params.raw..params.materials);
            recipes.push(pattern(rng, name, main));
        }
    }

    let mut demand_targets: Vec<usize> = bounds[3].clone().collect();
    demand_targets.shuffle(rng);
    demand_targets.truncate(params.demands);
    let mut stocked: Vec<usize> = (0..params.materials).collect();
    stocked.shuffle(rng);
    stocked.truncate(params.stocked);

    let materials = (0..params.materials)
        .map(|i| {
            let layer = layer_of(i) as f64;
            let cost = (rng.random_range(1.0..3.0f64) * (1.0 + layer)).round_to(2);
            let mut mat = Material::new(id(i)).with_cost(cost);
            mat.turnover = rng.random_range(100.0..50_000.0f64).round();
            let shelf_life = rng.random_range(1_000.0..20_000.0f64).round();
            mat.shelf_life = shelf_life;
            if demand_targets.contains(&i) {
                // Log-uniform between roughly 1 and 18000.
                let d = 10f64.powf(rng.random_range(0.0..4.25f64));
                mat = mat.with_demand(d.round_to(3));
            }
            if stocked.contains(&i) {
                for _ in 0..rng.random_range(1..=4) {
                    mat = mat.with_batch(
                        rng.random_range(10.0..500.0f64).round(),
                        rng.random_range(0.0..shelf_life).round(),
                    );
                }
            }
            mat
        })
        .collect();
    Instance::load(materials, recipes).expect("generated instance is valid")
}

trait RoundTo {
    fn round_to(self, digits: i32) -> f64;
}

impl RoundTo for f64 {
    fn round_to(self, digits: i32) -> f64 {
        let f = 10f64.powi(digits);
        (self * f).round() / f
    }
}
