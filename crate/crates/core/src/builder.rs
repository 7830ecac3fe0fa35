//! Continuous part of the planning model.

use std::collections::BTreeMap;

use carveopt_solver::{LinearProgram, Sense, VarId};

use crate::encoding::{ConstraintGroup, GroupKey};
use crate::error::ModelError;
use crate::model::{Instance, Scenario};
use crate::pwl::{pwl_breakpoints, pwl_cuts, PwlBreakpoints};

/// Position of one alternative member: recipe, group within the recipe,
/// and material.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct AltKey {
    pub recipe: usize,
    pub group: usize,
    pub material: usize,
}

/// Variables of the model by meaning. Vectors are indexed by material or
/// recipe position in the instance.
#[derive(Debug, Clone)]
pub struct VarIndex {
    pub z: Vec<VarId>,
    pub z_hat: BTreeMap<AltKey, VarId>,
    pub buy: Vec<VarId>,
    pub stock: Vec<VarId>,
    pub stock_new: Vec<VarId>,
    pub stock_old: Vec<VarId>,
    pub production: Vec<VarId>,
    pub usage: Vec<VarId>,
    /// Only for materials with stock.
    pub pwl: Vec<Option<VarId>>,
}

/// A planning LP together with its variable map and the MOQ/MPA groups
/// added so far.
#[derive(Debug, Clone)]
pub struct PpopModel {
    pub lp: LinearProgram,
    pub vars: VarIndex,
    pub(crate) groups: BTreeMap<GroupKey, ConstraintGroup>,
}

impl PpopModel {
    pub fn groups(&self) -> impl Iterator<Item = &ConstraintGroup> {
        self.groups.values()
    }

    pub fn has_group(&self, key: &GroupKey) -> bool {
        self.groups.contains_key(key)
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }
}

/// Values of f0..f4, unweighted.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Components(pub [f64; 5]);

impl Components {
    pub fn weighted(&self, w: &crate::model::Weights) -> f64 {
        self.0.iter().zip(&w.0).map(|(f, w)| f * w).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub z: Vec<f64>,
    pub z_hat: BTreeMap<AltKey, f64>,
    pub buy: Vec<f64>,
    pub stock_new: Vec<f64>,
    pub stock_old: Vec<f64>,
    pub stock_total: Vec<f64>,
    pub production: Vec<f64>,
    pub usage: Vec<f64>,
    /// Value of the PWL auxiliary variable r_i (0 without stock).
    pub pwl_value: Vec<f64>,
    pub components: Components,
    /// Weighted sum of the components.
    pub objective_value: f64,
}

pub(crate) fn exp_factor(value: f64, scale: f64) -> f64 {
    (-value / scale).exp()
}

/// Breakpoints of every material, by material index.
pub fn breakpoints(scenario: &Scenario) -> Vec<PwlBreakpoints> {
    scenario
        .instance
        .materials()
        .iter()
        .map(|m| pwl_breakpoints(&m.batches, scenario.exponent_scale))
        .collect()
}

pub fn build_base_lp(scenario: &Scenario) -> Result<PpopModel, ModelError> {
    scenario.validate()?;
    let inst: &Instance = &scenario.instance;
    let nm = inst.num_materials();
    let mut lp = LinearProgram::new();
    let inf = f64::INFINITY;

    let mut z = Vec::with_capacity(inst.num_recipes());
    for (j, r) in inst.recipes().iter().enumerate() {
        let v = match scenario.fixed_level(j) {
            Some(level) => lp.add_continuous(format!("z[{}]", r.id), level, level),
            None => lp.add_continuous(format!("z[{}]", r.id), 0.0, inf),
        };
        z.push(v);
    }
    let mut z_hat = BTreeMap::new();
    for (j, r) in inst.recipes().iter().enumerate() {
        for (g, group) in r.alt_groups.iter().enumerate() {
            for member in &group.members {
                let key = AltKey {
                    recipe: j,
                    group: g,
                    material: inst.mat(member),
                };
                let v = lp.add_continuous(format!("zhat[{},{g},{member}]", r.id), 0.0, inf);
                z_hat.insert(key, v);
            }
        }
    }

    let bps = breakpoints(scenario);
    let mut vars = VarIndex {
        z,
        z_hat,
        buy: Vec::with_capacity(nm),
        stock: Vec::with_capacity(nm),
        stock_new: Vec::with_capacity(nm),
        stock_old: Vec::with_capacity(nm),
        production: Vec::with_capacity(nm),
        usage: Vec::with_capacity(nm),
        pwl: Vec::with_capacity(nm),
    };
    for (i, m) in inst.materials().iter().enumerate() {
        let id = &m.id;
        let buy_cap = if inst.is_purchasable(i) { inf } else { 0.0 };
        vars.buy.push(lp.add_continuous(format!("b[{id}]"), 0.0, buy_cap));
        vars.stock.push(lp.add_continuous(format!("s[{id}]"), 0.0, inf));
        vars.stock_new.push(lp.add_continuous(format!("snew[{id}]"), 0.0, inf));
        vars.stock_old.push(lp.add_continuous(format!("sold[{id}]"), 0.0, m.stock()));
        vars.production.push(lp.add_continuous(format!("p[{id}]"), 0.0, inf));
        vars.usage.push(lp.add_continuous(format!("u[{id}]"), 0.0, inf));
        let r = (!bps[i].is_empty()).then(|| lp.add_continuous(format!("r[{id}]"), 0.0, inf));
        vars.pwl.push(r);
    }

    // Production and usage terms per material.
    let mut produced: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); nm];
    let mut used: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); nm];
    for (j, r) in inst.recipes().iter().enumerate() {
        for f in &r.outputs {
            produced[inst.mat(&f.material)].push((vars.z[j], f.qty));
        }
        for f in &r.inputs {
            used[inst.mat(&f.material)].push((vars.z[j], f.qty));
        }
    }
    for (key, &v) in &vars.z_hat {
        let q = inst.recipe(key.recipe).alt_groups[key.group].total_quantity;
        used[key.material].push((v, q));
    }

    let w = &scenario.weights.0;
    let scale = scenario.exponent_scale;
    for (i, m) in inst.materials().iter().enumerate() {
        let id = &m.id;
        let h = m.stock();
        let (b, s, s_new, s_old, p, u) = (
            vars.buy[i],
            vars.stock[i],
            vars.stock_new[i],
            vars.stock_old[i],
            vars.production[i],
            vars.usage[i],
        );
        // d + s + u = b + h + p
        lp.add_constraint(
            format!("balance[{id}]"),
            [(s, 1.0), (u, 1.0), (b, -1.0), (p, -1.0)],
            Sense::Eq,
            h - m.demand,
        );
        let mut terms = vec![(p, 1.0)];
        terms.extend(produced[i].iter().map(|&(v, q)| (v, -q)));
        lp.add_constraint(format!("production[{id}]"), terms, Sense::Eq, 0.0);
        let mut terms = vec![(u, 1.0)];
        terms.extend(used[i].iter().map(|&(v, q)| (v, -q)));
        lp.add_constraint(format!("usage[{id}]"), terms, Sense::Eq, 0.0);
        lp.add_constraint(
            format!("split[{id}]"),
            [(s, 1.0), (s_new, -1.0), (s_old, -1.0)],
            Sense::Eq,
            0.0,
        );
        // s_old >= h - d - u; with no stock s_old is fixed at 0 and the row
        // is implied.
        if h > 0.0 {
            lp.add_constraint(
                format!("old_stock[{id}]"),
                [(s_old, 1.0), (u, 1.0)],
                Sense::Ge,
                h - m.demand,
            );
        }
        if let Some(r) = vars.pwl[i] {
            for (k, cut) in pwl_cuts(&bps[i]).iter().enumerate() {
                lp.add_constraint(
                    format!("pwl[{id},{k}]"),
                    [(s_old, cut.slope), (r, -1.0)],
                    Sense::Le,
                    cut.rhs,
                );
            }
            lp.set_objective(r, w[4]);
        }
        lp.set_objective(b, w[0] * m.cost);
        lp.set_objective(s, w[1] * m.cost + w[2] * exp_factor(m.turnover, scale));
        lp.set_objective(s_new, w[3] * exp_factor(m.shelf_life, scale));
    }

    for (j, r) in inst.recipes().iter().enumerate() {
        for (g, group) in r.alt_groups.iter().enumerate() {
            let mut terms = vec![(vars.z[j], 1.0)];
            for member in &group.members {
                let key = AltKey {
                    recipe: j,
                    group: g,
                    material: inst.mat(member),
                };
                terms.push((vars.z_hat[&key], -1.0));
            }
            lp.add_constraint(format!("alternatives[{},{g}]", r.id), terms, Sense::Eq, 0.0);
        }
    }

    Ok(PpopModel {
        lp,
        vars,
        groups: BTreeMap::new(),
    })
}

/// f0..f4 of a solution, with f4 taken from the breakpoints directly
/// rather than from the auxiliary variables.
pub fn objective_components(scenario: &Scenario, solution: &Solution) -> Components {
    let inst = &scenario.instance;
    let scale = scenario.exponent_scale;
    let mut f = [0.0; 5];
    for (i, m) in inst.materials().iter().enumerate() {
        f[0] += m.cost * solution.buy[i];
        f[1] += m.cost * solution.stock_total[i];
        f[2] += exp_factor(m.turnover, scale) * solution.stock_total[i];
        f[3] += exp_factor(m.shelf_life, scale) * solution.stock_new[i];
        if !m.batches.is_empty() {
            f[4] += pwl_breakpoints(&m.batches, scale).evaluate(solution.stock_old[i]);
        }
    }
    Components(f)
}

/// Reads a [`Solution`] out of solver values for `model`.
pub fn extract_solution(scenario: &Scenario, model: &PpopModel, values: &[f64]) -> Solution {
    let v = |id: VarId| values[id.index()].max(0.0);
    let vars = &model.vars;
    let mut solution = Solution {
        z: vars.z.iter().map(|&x| v(x)).collect(),
        z_hat: vars.z_hat.iter().map(|(k, &x)| (*k, v(x))).collect(),
        buy: vars.buy.iter().map(|&x| v(x)).collect(),
        stock_new: vars.stock_new.iter().map(|&x| v(x)).collect(),
        stock_old: vars.stock_old.iter().map(|&x| v(x)).collect(),
        stock_total: vars.stock.iter().map(|&x| v(x)).collect(),
        production: vars.production.iter().map(|&x| v(x)).collect(),
        usage: vars.usage.iter().map(|&x| v(x)).collect(),
        pwl_value: vars.pwl.iter().map(|x| x.map_or(0.0, v)).collect(),
        components: Components::default(),
        objective_value: 0.0,
    };
    solution.components = objective_components(scenario, &solution);
    solution.objective_value = solution.components.weighted(&scenario.weights);
    solution
}

/// Material flows of one recipe at level `z` with alternative levels
/// `z_hat` given as `(group, material, level)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RecipeFlows {
    /// `(material index, quantity)` consumed, fixed inputs first.
    pub inputs: Vec<(usize, f64)>,
    pub outputs: Vec<(usize, f64)>,
}

pub fn recipe_flows(instance: &Instance, recipe: usize, z: f64, z_hat: &[(usize, usize, f64)]) -> RecipeFlows {
    let r = instance.recipe(recipe);
    let mut inputs: Vec<(usize, f64)> = r
        .inputs
        .iter()
        .map(|f| (instance.mat(&f.material), f.qty * z))
        .collect();
    for &(g, material, level) in z_hat {
        inputs.push((material, r.alt_groups[g].total_quantity * level));
    }
    let outputs = r
        .outputs
        .iter()
        .map(|f| (instance.mat(&f.material), f.qty * z))
        .collect();
    RecipeFlows { inputs, outputs }
}

/// Largest flow-balance residual of a solution, each scaled by
/// `1 + h + d`.
pub fn max_balance_residual(instance: &Instance, solution: &Solution) -> f64 {
    instance
        .materials()
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let h = m.stock();
            let lhs = m.demand + solution.stock_total[i] + solution.usage[i];
            let rhs = solution.buy[i] + h + solution.production[i];
            (lhs - rhs).abs() / (1.0 + h + m.demand)
        })
        .fold(0.0, f64::max)
}
