//! Domain types: materials, recipes, instances and scenarios.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::sync::Arc;

use carveopt_solver::SolverOptions;

use crate::error::ModelError;

#[derive(Debug, Clone, PartialEq)]
pub struct StockBatch {
    pub quantity: f64,
    pub remaining_shelf_life: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub id: String,
    pub name: String,
    pub cost: f64,
    pub demand: f64,
    /// Minimum order quantity; 0 means no rule.
    pub moq: f64,
    pub turnover: f64,
    /// Shelf life of freshly produced material.
    pub shelf_life: f64,
    pub batches: Vec<StockBatch>,
}

impl Material {
    /// A material with every number zero and no stock.
    pub fn new(id: impl Into<String>) -> Self {
        let id = id.into();
        Self {
            name: id.clone(),
            id,
            cost: 0.0,
            demand: 0.0,
            moq: 0.0,
            turnover: 0.0,
            shelf_life: 0.0,
            batches: Vec::new(),
        }
    }

    pub fn with_cost(mut self, cost: f64) -> Self {
        self.cost = cost;
        self
    }

    pub fn with_demand(mut self, demand: f64) -> Self {
        self.demand = demand;
        self
    }

    pub fn with_moq(mut self, moq: f64) -> Self {
        self.moq = moq;
        self
    }

    pub fn with_batch(mut self, quantity: f64, remaining_shelf_life: f64) -> Self {
        self.batches.push(StockBatch {
            quantity,
            remaining_shelf_life,
        });
        self
    }

    /// Total quantity in stock, h_i.
    pub fn stock(&self) -> f64 {
        self.batches.iter().map(|b| b.quantity).sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Flow {
    pub material: String,
    pub qty: f64,
}

impl Flow {
    pub fn new(material: impl Into<String>, qty: f64) -> Self {
        Self {
            material: material.into(),
            qty,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AlternativeGroup {
    pub members: Vec<String>,
    pub total_quantity: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Recipe {
    pub id: String,
    pub inputs: Vec<Flow>,
    pub outputs: Vec<Flow>,
    pub alt_groups: Vec<AlternativeGroup>,
}

impl Recipe {
    pub fn new(id: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            inputs: Vec::new(),
            outputs: Vec::new(),
            alt_groups: Vec::new(),
        }
    }

    pub fn input(mut self, material: impl Into<String>, qty: f64) -> Self {
        self.inputs.push(Flow::new(material, qty));
        self
    }

    pub fn output(mut self, material: impl Into<String>, qty: f64) -> Self {
        self.outputs.push(Flow::new(material, qty));
        self
    }

    pub fn alternatives<S: Into<String>>(
        mut self,
        members: impl IntoIterator<Item = S>,
        total_quantity: f64,
    ) -> Self {
        self.alt_groups.push(AlternativeGroup {
            members: members.into_iter().map(Into::into).collect(),
            total_quantity,
        });
        self
    }

    /// Sum of all quantities moved per unit of recipe level.
    pub fn throughput(&self) -> f64 {
        self.inputs.iter().map(|f| f.qty).sum::<f64>()
            + self.outputs.iter().map(|f| f.qty).sum::<f64>()
            + self.alt_groups.iter().map(|g| g.total_quantity).sum::<f64>()
    }
}

/// One broken invariant. `path` locates the offending field in document
/// terms, e.g. `materials[2].batches[0].quantity`.
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub path: String,
    pub subject: String,
    pub reason: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({}): {}", self.path, self.subject, self.reason)
    }
}

/// Materials and recipes, with lookups by id.
///
/// [`Instance::new`] accepts anything; [`Instance::load`] validates and
/// merges stock batches that share a shelf life. Solvers only accept
/// loaded instances (via [`Scenario::new`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    materials: Vec<Material>,
    recipes: Vec<Recipe>,
    material_index: HashMap<String, usize>,
    recipe_index: HashMap<String, usize>,
    produced: Vec<bool>,
    loaded: bool,
}

impl Instance {
    pub fn new(materials: Vec<Material>, recipes: Vec<Recipe>) -> Self {
        let mut material_index = HashMap::new();
        for (k, m) in materials.iter().enumerate() {
            material_index.entry(m.id.clone()).or_insert(k);
        }
        let mut recipe_index = HashMap::new();
        for (k, r) in recipes.iter().enumerate() {
            recipe_index.entry(r.id.clone()).or_insert(k);
        }
        let mut produced = vec![false; materials.len()];
        for r in &recipes {
            for f in &r.outputs {
                if let Some(&k) = material_index.get(&f.material) {
                    produced[k] = true;
                }
            }
        }
        Self {
            materials,
            recipes,
            material_index,
            recipe_index,
            produced,
            loaded: false,
        }
    }

    /// Validates, then merges batches with equal remaining shelf life.
    pub fn load(materials: Vec<Material>, recipes: Vec<Recipe>) -> Result<Self, ModelError> {
        let mut instance = Self::new(materials, recipes);
        let violations = validate_instance(&instance);
        if !violations.is_empty() {
            return Err(ModelError::InvalidInstance(violations));
        }
        for m in &mut instance.materials {
            merge_batches(&mut m.batches);
        }
        instance.loaded = true;
        Ok(instance)
    }

    pub fn is_loaded(&self) -> bool {
        self.loaded
    }

    pub fn materials(&self) -> &[Material] {
        &self.materials
    }

    pub fn recipes(&self) -> &[Recipe] {
        &self.recipes
    }

    pub fn material(&self, k: usize) -> &Material {
        &self.materials[k]
    }

    pub fn recipe(&self, k: usize) -> &Recipe {
        &self.recipes[k]
    }

    pub fn num_materials(&self) -> usize {
        self.materials.len()
    }

    pub fn num_recipes(&self) -> usize {
        self.recipes.len()
    }

    pub fn material_index(&self, id: &str) -> Option<usize> {
        self.material_index.get(id).copied()
    }

    pub fn recipe_index(&self, id: &str) -> Option<usize> {
        self.recipe_index.get(id).copied()
    }

    /// Index of a material known to exist (validated instances only).
    pub(crate) fn mat(&self, id: &str) -> usize {
        self.material_index[id]
    }

    /// True when no recipe outputs the material.
    pub fn purchasable(&self, id: &str) -> Result<bool, ModelError> {
        self.material_index(id)
            .map(|k| !self.produced[k])
            .ok_or_else(|| ModelError::UnknownMaterial(id.to_string()))
    }

    pub fn is_purchasable(&self, k: usize) -> bool {
        !self.produced[k]
    }

    pub fn num_alt_groups(&self) -> usize {
        self.recipes.iter().map(|r| r.alt_groups.len()).sum()
    }

    /// Copy of the instance with demands replaced (indexed by material).
    pub fn with_demands(&self, demands: &[f64]) -> Instance {
        let mut out = self.clone();
        for (m, d) in out.materials.iter_mut().zip(demands) {
            m.demand = *d;
        }
        out
    }
}

fn merge_batches(batches: &mut Vec<StockBatch>) {
    let mut merged: Vec<StockBatch> = Vec::with_capacity(batches.len());
    for b in batches.drain(..) {
        match merged
            .iter_mut()
            .find(|m| m.remaining_shelf_life == b.remaining_shelf_life)
        {
            Some(m) => m.quantity += b.quantity,
            None => merged.push(b),
        }
    }
    *batches = merged;
}

/// Every broken invariant of `instance`; empty iff well formed.
pub fn validate_instance(instance: &Instance) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut push = |path: String, subject: &str, reason: String| {
        out.push(Violation {
            path,
            subject: subject.to_string(),
            reason,
        })
    };

    let mut seen = HashSet::new();
    for (k, m) in instance.materials.iter().enumerate() {
        let at = |field: &str| format!("materials[{k}].{field}");
        if m.id.is_empty() {
            push(at("id"), &m.id, "material id is empty".into());
        } else if !seen.insert(m.id.as_str()) {
            push(at("id"), &m.id, "duplicate material id".into());
        }
        for (field, value) in [
            ("cost", m.cost),
            ("demand", m.demand),
            ("moq", m.moq),
            ("turnover", m.turnover),
            ("shelf_life", m.shelf_life),
        ] {
            if !(value.is_finite() && value >= 0.0) {
                push(at(field), &m.id, format!("{field} must be finite and non-negative, got {value}"));
            }
        }
        if m.moq > 0.0 && instance.produced[k] {
            push(
                at("moq"),
                &m.id,
                "a produced material cannot be bought, so it cannot carry a minimum order quantity; model the bought variant as a separate material".into(),
            );
        }
        for (b, batch) in m.batches.iter().enumerate() {
            if !(batch.quantity.is_finite() && batch.quantity > 0.0) {
                push(
                    format!("materials[{k}].batches[{b}].quantity"),
                    &m.id,
                    format!("batch quantity must be positive, got {}", batch.quantity),
                );
            }
            let life = batch.remaining_shelf_life;
            if !(life.is_finite() && life >= 0.0) {
                push(
                    format!("materials[{k}].batches[{b}].remaining_shelf_life"),
                    &m.id,
                    format!("remaining shelf life must be finite and non-negative, got {life}"),
                );
            }
        }
    }

    let mut seen = HashSet::new();
    for (k, r) in instance.recipes.iter().enumerate() {
        if r.id.is_empty() {
            push(format!("recipes[{k}].id"), &r.id, "recipe id is empty".into());
        } else if !seen.insert(r.id.as_str()) {
            push(format!("recipes[{k}].id"), &r.id, "duplicate recipe id".into());
        }
        if r.inputs.is_empty() && r.outputs.is_empty() && r.alt_groups.is_empty() {
            push(format!("recipes[{k}]"), &r.id, "recipe has no inputs, outputs or alternatives".into());
        }
        for (list, flows) in [("inputs", &r.inputs), ("outputs", &r.outputs)] {
            let mut names = HashSet::new();
            for (f, flow) in flows.iter().enumerate() {
                let path = format!("recipes[{k}].{list}[{f}]");
                if instance.material_index(&flow.material).is_none() {
                    push(format!("{path}.material"), &r.id, format!("unknown material '{}'", flow.material));
                }
                if !names.insert(flow.material.as_str()) {
                    push(format!("{path}.material"), &r.id, format!("material '{}' listed twice in {list}", flow.material));
                }
                if !(flow.qty.is_finite() && flow.qty > 0.0) {
                    push(format!("{path}.qty"), &r.id, format!("quantity must be positive, got {}", flow.qty));
                }
            }
        }
        for (g, group) in r.alt_groups.iter().enumerate() {
            let path = format!("recipes[{k}].alt_groups[{g}]");
            if group.members.len() < 2 {
                push(format!("{path}.members"), &r.id, "a group of alternatives needs at least two members".into());
            }
            let mut names = HashSet::new();
            for (i, member) in group.members.iter().enumerate() {
                if instance.material_index(member).is_none() {
                    push(format!("{path}.members[{i}]"), &r.id, format!("unknown material '{member}'"));
                }
                if !names.insert(member.as_str()) {
                    push(format!("{path}.members[{i}]"), &r.id, format!("material '{member}' listed twice in one group"));
                }
            }
            if !(group.total_quantity.is_finite() && group.total_quantity > 0.0) {
                push(
                    format!("{path}.total_quantity"),
                    &r.id,
                    format!("total quantity must be positive, got {}", group.total_quantity),
                );
            }
        }
    }
    out
}

/// Weights of the five objective components f0..f4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights(pub [f64; 5]);

impl Weights {
    pub const COST_ONLY: Weights = Weights([1.0, 0.0, 0.0, 0.0, 0.0]);
    /// The compromise setting used for most planning runs.
    pub const PLANNING: Weights = Weights([100.0, 100.0, 1.0, 1.0, 1.0]);

    /// Unit weight on component `l` alone.
    pub fn unit(l: usize) -> Weights {
        let mut w = [0.0; 5];
        w[l] = 1.0;
        Weights(w)
    }

    pub fn scaled(self, k: f64) -> Weights {
        Weights(self.0.map(|w| w * k))
    }

    /// Weight sets laid out like the published weight study: each
    /// component alone, then three compromises.
    pub fn presets() -> Vec<Weights> {
        let mut sets: Vec<Weights> = (0..5).map(Weights::unit).collect();
        sets.push(Weights([1.0; 5]));
        sets.push(Weights([10.0, 10.0, 1.0, 1.0, 1.0]));
        sets.push(Weights::PLANNING);
        sets
    }
}

impl Default for Weights {
    fn default() -> Self {
        Weights::PLANNING
    }
}

impl fmt::Display for Weights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|w| format!("{w}")).collect();
        write!(f, "({})", parts.join(","))
    }
}

pub const DEFAULT_MPA_RATIO: f64 = 0.05;
pub const DEFAULT_EXPONENT_SCALE: f64 = 5000.0;
pub const DEFAULT_BIG_M: f64 = 1e7;

/// An instance plus everything needed to pose one optimization problem.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub instance: Arc<Instance>,
    pub weights: Weights,
    /// Recipe levels pinned to exact values, by recipe id.
    pub fixed_recipe_levels: BTreeMap<String, f64>,
    /// Uniform minimum order quantity for every purchasable material.
    pub moq_override: Option<f64>,
    pub mpa_ratio: f64,
    /// Divisor applied to shelf lives and turnovers inside exponentials.
    pub exponent_scale: f64,
    /// Fallback big-M when no tighter bound can be derived.
    pub big_m: f64,
    pub solver_options: SolverOptions,
}

impl Scenario {
    pub fn new(instance: impl Into<Arc<Instance>>) -> Result<Self, ModelError> {
        let instance = instance.into();
        if !instance.is_loaded() {
            let loaded = Instance::load(instance.materials.clone(), instance.recipes.clone())?;
            return Self::new(loaded);
        }
        Ok(Self {
            instance,
            weights: Weights::default(),
            fixed_recipe_levels: BTreeMap::new(),
            moq_override: None,
            mpa_ratio: DEFAULT_MPA_RATIO,
            exponent_scale: DEFAULT_EXPONENT_SCALE,
            big_m: DEFAULT_BIG_M,
            solver_options: SolverOptions::default(),
        })
    }

    pub fn with_weights(mut self, weights: Weights) -> Self {
        self.weights = weights;
        self
    }

    pub fn with_moq(mut self, moq: Option<f64>) -> Self {
        self.moq_override = moq;
        self
    }

    pub fn with_fixed_level(mut self, recipe: impl Into<String>, level: f64) -> Self {
        self.fixed_recipe_levels.insert(recipe.into(), level);
        self
    }

    pub fn with_mpa_ratio(mut self, ratio: f64) -> Self {
        self.mpa_ratio = ratio;
        self
    }

    /// Checks every scenario parameter against the instance.
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidParameter(msg));
        for (l, w) in self.weights.0.iter().enumerate() {
            if !(w.is_finite() && *w >= 0.0) {
                return bad(format!("weight w{l} must be finite and non-negative, got {w}"));
            }
        }
        for (id, level) in &self.fixed_recipe_levels {
            if self.instance.recipe_index(id).is_none() {
                return Err(ModelError::UnknownRecipe(id.clone()));
            }
            if !(level.is_finite() && *level >= 0.0) {
                return bad(format!("fixed level of recipe '{id}' must be non-negative, got {level}"));
            }
        }
        if let Some(moq) = self.moq_override {
            if !(moq.is_finite() && moq >= 0.0) {
                return bad(format!("moq must be finite and non-negative, got {moq}"));
            }
        }
        if !(self.mpa_ratio > 0.0 && self.mpa_ratio < 1.0) {
            return bad(format!("mpa_ratio must lie in (0, 1), got {}", self.mpa_ratio));
        }
        if !(self.exponent_scale.is_finite() && self.exponent_scale > 0.0) {
            return bad(format!("exponent_scale must be positive, got {}", self.exponent_scale));
        }
        if !(self.big_m.is_finite() && self.big_m > 0.0) {
            return bad(format!("big_m must be positive, got {}", self.big_m));
        }
        self.solver_options.validate()?;
        Ok(())
    }

    /// Effective minimum order quantity of material `k` (0 if it cannot
    /// be bought).
    pub fn moq(&self, k: usize) -> f64 {
        if !self.instance.is_purchasable(k) {
            return 0.0;
        }
        self.moq_override
            .unwrap_or_else(|| self.instance.material(k).moq)
    }

    /// Pinned level of recipe `j`, if any.
    pub fn fixed_level(&self, j: usize) -> Option<f64> {
        self.fixed_recipe_levels
            .get(&self.instance.recipe(j).id)
            .copied()
    }
}
