//! Sweep parameters and row serialization.

use carveopt_core::lab::{
    calibrate_demands, demand_scalability, hog_sweep, moq_sweep, weight_sweep, write_csv, CsvOptions, SweepKey,
    SweepKind, SweepRow,
};
use carveopt_core::{ModelError, Scenario, Weights};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::document::ComponentValues;

pub fn parse_kind(s: &str) -> Option<SweepKind> {
    [SweepKind::Weights, SweepKind::Hogs, SweepKind::Moq, SweepKind::Demand]
        .into_iter()
        .find(|k| k.as_str() == s)
}

/// Parameters for every sweep kind; each kind reads only its own.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SweepParams {
    /// Weight sets for a weight sweep; defaults to the presets.
    #[serde(default)]
    pub weight_sets: Option<Vec<[f64; 5]>>,
    #[serde(default)]
    pub recipe: Option<String>,
    #[serde(default)]
    pub levels: Option<Vec<f64>>,
    #[serde(default)]
    pub moq_values: Option<Vec<f64>>,
    #[serde(default)]
    pub compare_global: bool,
    #[serde(default)]
    pub counts: Option<Vec<usize>>,
    #[serde(default)]
    pub seed: Option<u64>,
}

fn missing(what: &str, kind: SweepKind) -> ModelError {
    ModelError::InvalidParameter(format!("{} sweep needs {what}", kind.as_str()))
}

pub fn run_sweep(kind: SweepKind, base: &Scenario, p: &SweepParams) -> Result<Vec<SweepRow>, ModelError> {
    match kind {
        SweepKind::Weights => {
            let sets = match &p.weight_sets {
                Some(sets) => sets.iter().map(|&w| Weights(w)).collect(),
                None => Weights::presets(),
            };
            weight_sweep(base, &sets)
        }
        SweepKind::Hogs => {
            let recipe = p.recipe.as_deref().ok_or_else(|| missing("a recipe", kind))?;
            let levels = p.levels.as_deref().ok_or_else(|| missing("levels", kind))?;
            hog_sweep(base, recipe, levels)
        }
        SweepKind::Moq => {
            let values = p.moq_values.as_deref().ok_or_else(|| missing("moq_values", kind))?;
            moq_sweep(base, values, p.compare_global)
        }
        SweepKind::Demand => {
            let counts = p.counts.as_deref().ok_or_else(|| missing("counts", kind))?;
            let calibration = calibrate_demands(base)?;
            demand_scalability(base, &calibration, counts, p.seed.unwrap_or(0))
        }
    }
}

pub fn csv_text(rows: &[SweepRow], options: CsvOptions) -> String {
    let mut out = Vec::new();
    write_csv(rows, &mut out, options).expect("writing to memory cannot fail");
    String::from_utf8(out).expect("csv output is UTF-8")
}

fn key_value(key: &SweepKey) -> Value {
    match key {
        SweepKey::Weights(w) => json!(w.0),
        SweepKey::Level(x) | SweepKey::Moq(x) => json!(x),
        SweepKey::Demands(n) => json!(n),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRowDoc {
    pub key: Value,
    pub status: String,
    pub objective: Option<f64>,
    pub components: Option<ComponentValues>,
    pub t: [Option<f64>; 5],
    pub iterations: usize,
    pub added_moq: usize,
    pub added_mpa: usize,
    pub global_objective: Option<f64>,
    pub wall_time_s: f64,
}

impl From<&SweepRow> for SweepRowDoc {
    fn from(r: &SweepRow) -> Self {
        Self {
            key: key_value(&r.key),
            status: r.status.to_string(),
            objective: r.objective,
            components: r.components.map(|c| c.0.into()),
            t: r.t,
            iterations: r.iterations,
            added_moq: r.added_moq,
            added_mpa: r.added_mpa,
            global_objective: r.global_objective,
            wall_time_s: r.wall_time.as_secs_f64(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepDocument {
    pub kind: String,
    pub rows: Vec<SweepRowDoc>,
    /// The same rows as CSV, without timing.
    pub csv: String,
}

impl SweepDocument {
    pub fn new(kind: SweepKind, rows: &[SweepRow]) -> Self {
        Self {
            kind: kind.as_str().into(),
            rows: rows.iter().map(SweepRowDoc::from).collect(),
            csv: csv_text(rows, CsvOptions::default()),
        }
    }
}
