//! Scenario parameters shared by the command line and the HTTP service.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Duration;

use carveopt_core::{Instance, Method, ModelError, Scenario, Weights};
use serde::{Deserialize, Serialize};

use crate::document::ScenarioDefaults;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodName {
    #[default]
    Iterative,
    Global,
}

impl From<MethodName> for Method {
    fn from(m: MethodName) -> Self {
        match m {
            MethodName::Iterative => Method::Iterative,
            MethodName::Global => Method::Global,
        }
    }
}

/// Overrides on top of an instance's defaults. Everything is optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ScenarioParams {
    #[serde(default)]
    pub weights: Option<[f64; 5]>,
    #[serde(default)]
    pub moq: Option<f64>,
    #[serde(default)]
    pub mpa_ratio: Option<f64>,
    #[serde(default)]
    pub fixed_recipe_levels: BTreeMap<String, f64>,
    #[serde(default)]
    pub method: Option<MethodName>,
    /// Seconds.
    #[serde(default)]
    pub time_limit: Option<f64>,
}

impl ScenarioParams {
    pub fn method(&self) -> Method {
        self.method.unwrap_or_default().into()
    }

    pub fn scenario(&self, instance: Arc<Instance>, defaults: &ScenarioDefaults) -> Result<Scenario, ModelError> {
        let mut s = defaults.apply(Scenario::new(instance)?);
        if let Some(w) = self.weights {
            s.weights = Weights(w);
        }
        if self.moq.is_some() {
            s.moq_override = self.moq;
        }
        if let Some(r) = self.mpa_ratio {
            s.mpa_ratio = r;
        }
        for (id, &level) in &self.fixed_recipe_levels {
            s = s.with_fixed_level(id.clone(), level);
        }
        if let Some(t) = self.time_limit {
            if !(t.is_finite() && t >= 0.0) {
                return Err(ModelError::InvalidParameter(format!("time_limit must be non-negative, got {t}")));
            }
            s.solver_options.time_limit = Duration::from_secs_f64(t);
        }
        s.validate()?;
        Ok(s)
    }
}
