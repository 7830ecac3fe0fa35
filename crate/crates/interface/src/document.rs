//! JSON documents: instances on the way in, solutions on the way out.

use carveopt_core::solver::Status;
use carveopt_core::{
    AlternativeGroup, Flow, Instance, Material, ModelError, Recipe, Scenario, SolveReport, StockBatch, Violation,
    Weights,
};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const SCHEMA_VERSION: u32 = 1;
/// Values at or below this magnitude are left out of solution documents.
pub const PRINT_THRESHOLD: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceDocument {
    pub schema_version: u32,
    pub materials: Vec<MaterialDoc>,
    #[serde(default)]
    pub recipes: Vec<RecipeDoc>,
    /// Scenario settings used when a request does not override them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub defaults: Option<ScenarioDefaults>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterialDoc {
    pub id: String,
    #[serde(default)]
    pub name: Option<String>,
    pub cost: f64,
    #[serde(default)]
    pub demand: f64,
    #[serde(default)]
    pub moq: f64,
    #[serde(default)]
    pub turnover: f64,
    #[serde(default)]
    pub shelf_life: f64,
    #[serde(default)]
    pub batches: Vec<BatchDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BatchDoc {
    pub quantity: f64,
    pub remaining_shelf_life: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RecipeDoc {
    pub id: String,
    #[serde(default)]
    pub inputs: Vec<FlowDoc>,
    #[serde(default)]
    pub outputs: Vec<FlowDoc>,
    #[serde(default)]
    pub alt_groups: Vec<AltGroupDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowDoc {
    pub material: String,
    pub qty: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AltGroupDoc {
    pub members: Vec<String>,
    pub total_quantity: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDefaults {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<[f64; 5]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub moq: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mpa_ratio: Option<f64>,
}

impl ScenarioDefaults {
    /// Settings of `scenario` that differ from a fresh scenario.
    pub fn of(scenario: &Scenario) -> Self {
        let fresh = Scenario::new(scenario.instance.clone()).expect("instance already loaded");
        Self {
            weights: (scenario.weights != fresh.weights).then_some(scenario.weights.0),
            moq: scenario.moq_override,
            mpa_ratio: (scenario.mpa_ratio != fresh.mpa_ratio).then_some(scenario.mpa_ratio),
        }
    }

    pub fn apply(&self, mut scenario: Scenario) -> Scenario {
        if let Some(w) = self.weights {
            scenario.weights = Weights(w);
        }
        if self.moq.is_some() {
            scenario.moq_override = self.moq;
        }
        if let Some(r) = self.mpa_ratio {
            scenario.mpa_ratio = r;
        }
        scenario
    }
}

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("malformed JSON at line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("schema violation at {path}: {message}")]
    Schema { path: String, message: String },
    #[error("{}", ModelError::InvalidInstance(.0.clone()))]
    Invalid(Vec<Violation>),
}

impl ParseError {
    pub fn kind(&self) -> &'static str {
        match self {
            ParseError::Syntax { .. } => "syntax",
            ParseError::Schema { .. } => "schema",
            ParseError::Invalid(_) => "invalid",
        }
    }
}

/// Deserializes any document type, reporting schema errors with the
/// JSON path of the offending value.
pub fn from_json<T: serde::de::DeserializeOwned>(bytes: &[u8]) -> Result<T, ParseError> {
    let mut de = serde_json::Deserializer::from_slice(bytes);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|err| {
        let path = err.path().to_string();
        let inner = err.into_inner();
        match inner.classify() {
            serde_json::error::Category::Data => ParseError::Schema {
                path,
                message: strip_position(&inner),
            },
            _ => syntax(&inner),
        }
    })?;
    de.end().map_err(|e| syntax(&e))?;
    Ok(value)
}

fn syntax(err: &serde_json::Error) -> ParseError {
    ParseError::Syntax {
        line: err.line(),
        column: err.column(),
        message: strip_position(err),
    }
}

fn strip_position(err: &serde_json::Error) -> String {
    let text = err.to_string();
    match text.rfind(" at line ") {
        Some(k) => text[..k].to_string(),
        None => text,
    }
}

impl InstanceDocument {
    pub fn from_instance(instance: &Instance, defaults: Option<ScenarioDefaults>) -> Self {
        let materials = instance
            .materials()
            .iter()
            .map(|m| MaterialDoc {
                id: m.id.clone(),
                name: Some(m.name.clone()),
                cost: m.cost,
                demand: m.demand,
                moq: m.moq,
                turnover: m.turnover,
                shelf_life: m.shelf_life,
                batches: m
                    .batches
                    .iter()
                    .map(|b| BatchDoc {
                        quantity: b.quantity,
                        remaining_shelf_life: b.remaining_shelf_life,
                    })
                    .collect(),
            })
            .collect();
        let flows = |list: &[Flow]| {
            list.iter()
                .map(|f| FlowDoc {
                    material: f.material.clone(),
                    qty: f.qty,
                })
                .collect()
        };
        let recipes = instance
            .recipes()
            .iter()
            .map(|r| RecipeDoc {
                id: r.id.clone(),
                inputs: flows(&r.inputs),
                outputs: flows(&r.outputs),
                alt_groups: r
                    .alt_groups
                    .iter()
                    .map(|g| AltGroupDoc {
                        members: g.members.clone(),
                        total_quantity: g.total_quantity,
                    })
                    .collect(),
            })
            .collect();
        Self {
            schema_version: SCHEMA_VERSION,
            materials,
            recipes,
            defaults,
        }
    }

    /// Validates and loads the instance.
    pub fn to_instance(&self) -> Result<Instance, ParseError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(ParseError::Schema {
                path: "schema_version".into(),
                message: format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version),
            });
        }
        let materials = self
            .materials
            .iter()
            .map(|m| Material {
                id: m.id.clone(),
                name: m.name.clone().unwrap_or_else(|| m.id.clone()),
                cost: m.cost,
                demand: m.demand,
                moq: m.moq,
                turnover: m.turnover,
                shelf_life: m.shelf_life,
                batches: m
                    .batches
                    .iter()
                    .map(|b| StockBatch {
                        quantity: b.quantity,
                        remaining_shelf_life: b.remaining_shelf_life,
                    })
                    .collect(),
            })
            .collect();
        let flows = |list: &[FlowDoc]| list.iter().map(|f| Flow::new(f.material.clone(), f.qty)).collect();
        let recipes = self
            .recipes
            .iter()
            .map(|r| Recipe {
                id: r.id.clone(),
                inputs: flows(&r.inputs),
                outputs: flows(&r.outputs),
                alt_groups: r
                    .alt_groups
                    .iter()
                    .map(|g| AlternativeGroup {
                        members: g.members.clone(),
                        total_quantity: g.total_quantity,
                    })
                    .collect(),
            })
            .collect();
        Instance::load(materials, recipes).map_err(|e| match e {
            ModelError::InvalidInstance(v) => ParseError::Invalid(v),
            other => ParseError::Schema {
                path: String::new(),
                message: other.to_string(),
            },
        })
    }
}

/// Parses and validates an instance document.
pub fn parse_instance(bytes: &[u8]) -> Result<(Instance, ScenarioDefaults), ParseError> {
    let doc: InstanceDocument = from_json(bytes)?;
    let instance = doc.to_instance()?;
    Ok((instance, doc.defaults.unwrap_or_default()))
}

pub fn serialize_instance(instance: &Instance, defaults: &ScenarioDefaults) -> String {
    let defaults = (*defaults != ScenarioDefaults::default()).then(|| defaults.clone());
    let doc = InstanceDocument::from_instance(instance, defaults);
    serde_json::to_string_pretty(&doc).expect("documents always serialize")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentValues {
    pub f0: f64,
    pub f1: f64,
    pub f2: f64,
    pub f3: f64,
    pub f4: f64,
}

impl From<[f64; 5]> for ComponentValues {
    fn from(c: [f64; 5]) -> Self {
        let [f0, f1, f2, f3, f4] = c;
        Self { f0, f1, f2, f3, f4 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AltLevel {
    pub recipe: String,
    pub group: usize,
    pub material: String,
    pub level: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationDoc {
    pub status: String,
    pub objective: Option<f64>,
    pub added_moq: usize,
    pub added_mpa: usize,
    pub nodes: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsDoc {
    pub iterations: usize,
    /// MOQ groups in the final model (#consB).
    pub added_moq: usize,
    /// Alternative-share groups in the final model (#consP).
    pub added_mpa: usize,
    pub feasible_for_full: bool,
    pub wall_time_s: f64,
    pub per_iteration: Vec<IterationDoc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionDocument {
    pub status: String,
    pub method: String,
    pub weights: [f64; 5],
    pub objective: Option<f64>,
    pub components: Option<ComponentValues>,
    /// Recipe levels by recipe id.
    pub z: IndexMap<String, f64>,
    pub z_hat: Vec<AltLevel>,
    pub buy: IndexMap<String, f64>,
    pub stock_new: IndexMap<String, f64>,
    pub stock_old: IndexMap<String, f64>,
    pub stats: StatsDoc,
}

fn nonzero(ids: impl Iterator<Item = String>, values: &[f64]) -> IndexMap<String, f64> {
    ids.zip(values)
        .filter(|(_, v)| v.abs() > PRINT_THRESHOLD)
        .map(|(id, &v)| (id, v))
        .collect()
}

impl SolutionDocument {
    pub fn new(scenario: &Scenario, report: &SolveReport) -> Self {
        let inst = &scenario.instance;
        let usable = report.status == Status::Optimal || report.feasible_for_full;
        let solution = report.solution.as_ref().filter(|_| usable);
        let material_ids = || inst.materials().iter().map(|m| m.id.clone());
        let (mut z, mut buy, mut stock_new, mut stock_old) = Default::default();
        let mut z_hat = Vec::new();
        if let Some(sol) = solution {
            z = nonzero(inst.recipes().iter().map(|r| r.id.clone()), &sol.z);
            buy = nonzero(material_ids(), &sol.buy);
            stock_new = nonzero(material_ids(), &sol.stock_new);
            stock_old = nonzero(material_ids(), &sol.stock_old);
            z_hat = sol
                .z_hat
                .iter()
                .filter(|(_, v)| v.abs() > PRINT_THRESHOLD)
                .map(|(k, &level)| AltLevel {
                    recipe: inst.recipe(k.recipe).id.clone(),
                    group: k.group,
                    material: inst.material(k.material).id.clone(),
                    level,
                })
                .collect();
        }
        Self {
            status: report.status.to_string(),
            method: report.method.as_str().into(),
            weights: scenario.weights.0,
            objective: solution.map(|s| s.objective_value),
            components: solution.map(|s| s.components.0.into()),
            z,
            z_hat,
            buy,
            stock_new,
            stock_old,
            stats: StatsDoc {
                iterations: report.iterations,
                added_moq: report.added_moq,
                added_mpa: report.added_mpa,
                feasible_for_full: report.feasible_for_full,
                wall_time_s: report.wall_time.as_secs_f64(),
                per_iteration: report
                    .per_iteration
                    .iter()
                    .map(|r| IterationDoc {
                        status: r.status.to_string(),
                        objective: r.objective,
                        added_moq: r.added_moq,
                        added_mpa: r.added_mpa,
                        nodes: r.nodes,
                        wall_time_s: r.wall_time.as_secs_f64(),
                    })
                    .collect(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandDiagnostic {
    pub material: String,
    pub demand: f64,
    pub purchasable: bool,
    pub stock: f64,
}

/// Body returned when no plan exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibleDocument {
    pub status: String,
    pub method: String,
    pub message: String,
    pub iterations: usize,
    pub fixed_recipe_levels: IndexMap<String, f64>,
    /// Every material with a demand, with the supply it could draw on
    /// without production.
    pub demands: Vec<DemandDiagnostic>,
}

impl InfeasibleDocument {
    pub fn new(scenario: &Scenario, report: &SolveReport) -> Self {
        let inst = &scenario.instance;
        let message = match report.status {
            Status::Unbounded => "the model is unbounded".to_string(),
            _ if scenario.fixed_recipe_levels.is_empty() => "no plan meets every demand".to_string(),
            _ => "no plan meets every demand with the pinned recipe levels".to_string(),
        };
        Self {
            status: report.status.to_string(),
            method: report.method.as_str().into(),
            message,
            iterations: report.iterations,
            fixed_recipe_levels: scenario.fixed_recipe_levels.iter().map(|(k, &v)| (k.clone(), v)).collect(),
            demands: inst
                .materials()
                .iter()
                .enumerate()
                .filter(|(_, m)| m.demand > 0.0)
                .map(|(k, m)| DemandDiagnostic {
                    material: m.id.clone(),
                    demand: m.demand,
                    purchasable: inst.is_purchasable(k),
                    stock: m.stock(),
                })
                .collect(),
        }
    }
}

/// Summary statistics reported for an uploaded instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceMetadata {
    pub materials: usize,
    pub recipes: usize,
    pub alt_groups: usize,
    pub purchasable: usize,
    pub stocked: usize,
    pub demands: DemandStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemandStats {
    pub nonzero: usize,
    pub max: Option<f64>,
    pub min_nonzero: Option<f64>,
    /// Mean over the nonzero demands.
    pub mean: Option<f64>,
}

impl InstanceMetadata {
    pub fn of(inst: &Instance) -> Self {
        let demands: Vec<f64> = inst.materials().iter().map(|m| m.demand).filter(|&d| d > 0.0).collect();
        let n = demands.len();
        Self {
            materials: inst.num_materials(),
            recipes: inst.num_recipes(),
            alt_groups: inst.num_alt_groups(),
            purchasable: (0..inst.num_materials()).filter(|&k| inst.is_purchasable(k)).count(),
            stocked: inst.materials().iter().filter(|m| !m.batches.is_empty()).count(),
            demands: DemandStats {
                nonzero: n,
                max: demands.iter().copied().reduce(f64::max),
                min_nonzero: demands.iter().copied().reduce(f64::min),
                mean: (n > 0).then(|| demands.iter().sum::<f64>() / n as f64),
            },
        }
    }
}
