//! Big-M encodings of the minimum order quantity (MOQ) and minimum
//! percentage in alternatives (MPA) disjunctions.

use std::fmt;

use carveopt_solver::{Sense, VarId};

use crate::builder::{build_base_lp, AltKey, PpopModel};
use crate::error::ModelError;
use crate::model::Scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum GroupKey {
    /// Material index.
    Moq(usize),
    Mpa(AltKey),
}

impl fmt::Display for GroupKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            GroupKey::Moq(i) => write!(f, "moq[{i}]"),
            GroupKey::Mpa(k) => write!(f, "mpa[{},{},{}]", k.recipe, k.group, k.material),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintGroup {
    pub key: GroupKey,
    pub binary: VarId,
    /// Row indices of the two big-M rows.
    pub rows: [usize; 2],
    pub big_m: f64,
}

/// Big-M for the MOQ rows of material `i`.
///
/// If every recipe consuming `i` has a pinned level, usage is bounded by
/// `U = sum(q * level)`, and some optimal plan buys at most
/// `max(moq, d + U)`: anything beyond that only goes to stock, and
/// trimming it never raises a non-negatively weighted objective. The
/// result is capped at the scenario fallback and never below the MOQ.
pub fn big_m_for_moq(scenario: &Scenario, i: usize) -> f64 {
    let inst = &scenario.instance;
    let moq = scenario.moq(i);
    let id = &inst.material(i).id;
    let mut usage_cap = 0.0;
    for (j, r) in inst.recipes().iter().enumerate() {
        let mut per_level = r
            .inputs
            .iter()
            .filter(|f| &f.material == id)
            .map(|f| f.qty)
            .sum::<f64>();
        per_level += r
            .alt_groups
            .iter()
            .filter(|g| g.members.contains(id))
            .map(|g| g.total_quantity)
            .sum::<f64>();
        if per_level > 0.0 {
            match scenario.fixed_level(j) {
                Some(level) => usage_cap += per_level * level,
                None => return scenario.big_m.max(moq),
            }
        }
    }
    let derived = inst.material(i).demand + usage_cap;
    derived.min(scenario.big_m).max(moq)
}

/// Big-M for an MPA group: the pinned level of the recipe when there is
/// one (z_hat never exceeds z), the fallback otherwise.
pub fn big_m_for_mpa(scenario: &Scenario, key: AltKey) -> f64 {
    match scenario.fixed_level(key.recipe) {
        Some(level) => level.max(f64::MIN_POSITIVE),
        None => scenario.big_m,
    }
}

impl PpopModel {
    /// `b <= M v` and `b >= moq - (1 - v) M`.
    pub fn add_moq_group(&mut self, scenario: &Scenario, i: usize) -> Result<&ConstraintGroup, ModelError> {
        let key = GroupKey::Moq(i);
        if self.groups.contains_key(&key) {
            return Err(ModelError::DuplicateGroup(key.to_string()));
        }
        let id = &scenario.instance.material(i).id;
        let moq = scenario.moq(i);
        let m = big_m_for_moq(scenario, i);
        let b = self.vars.buy[i];
        let v = self.lp.add_binary(format!("v[{id}]"));
        let on = self
            .lp
            .add_constraint(format!("moq_on[{id}]"), [(b, 1.0), (v, -m)], Sense::Le, 0.0);
        let min = self.lp.add_constraint(
            format!("moq_min[{id}]"),
            [(b, 1.0), (v, -m)],
            Sense::Ge,
            moq - m,
        );
        Ok(self.insert_group(ConstraintGroup {
            key,
            binary: v,
            rows: [on, min],
            big_m: m,
        }))
    }

    /// `z_hat <= M v` and `z_hat >= ratio * z - (1 - v) M`.
    pub fn add_mpa_group(&mut self, scenario: &Scenario, alt: AltKey) -> Result<&ConstraintGroup, ModelError> {
        let key = GroupKey::Mpa(alt);
        if self.groups.contains_key(&key) {
            return Err(ModelError::DuplicateGroup(key.to_string()));
        }
        let Some(&zh) = self.vars.z_hat.get(&alt) else {
            return Err(ModelError::InvalidParameter(format!("no alternative member {key}")));
        };
        let inst = &scenario.instance;
        let name = format!(
            "{},{},{}",
            inst.recipe(alt.recipe).id,
            alt.group,
            inst.material(alt.material).id
        );
        let m = big_m_for_mpa(scenario, alt);
        let z = self.vars.z[alt.recipe];
        let v = self.lp.add_binary(format!("vhat[{name}]"));
        let on = self
            .lp
            .add_constraint(format!("mpa_on[{name}]"), [(zh, 1.0), (v, -m)], Sense::Le, 0.0);
        let min = self.lp.add_constraint(
            format!("mpa_min[{name}]"),
            [(zh, 1.0), (z, -scenario.mpa_ratio), (v, -m)],
            Sense::Ge,
            -m,
        );
        Ok(self.insert_group(ConstraintGroup {
            key,
            binary: v,
            rows: [on, min],
            big_m: m,
        }))
    }

    pub fn add_group(&mut self, scenario: &Scenario, key: GroupKey) -> Result<&ConstraintGroup, ModelError> {
        match key {
            GroupKey::Moq(i) => self.add_moq_group(scenario, i),
            GroupKey::Mpa(alt) => self.add_mpa_group(scenario, alt),
        }
    }

    fn insert_group(&mut self, group: ConstraintGroup) -> &ConstraintGroup {
        let key = group.key;
        self.groups.insert(key, group);
        &self.groups[&key]
    }
}

/// Every group the complete model carries: MOQ for purchasable materials
/// with a positive MOQ, MPA for every alternative member.
pub fn all_group_keys(scenario: &Scenario) -> Vec<GroupKey> {
    let inst = &scenario.instance;
    let mut keys: Vec<GroupKey> = (0..inst.num_materials())
        .filter(|&i| scenario.moq(i) > 0.0)
        .map(GroupKey::Moq)
        .collect();
    for (j, r) in inst.recipes().iter().enumerate() {
        for (g, group) in r.alt_groups.iter().enumerate() {
            for member in &group.members {
                keys.push(GroupKey::Mpa(AltKey {
                    recipe: j,
                    group: g,
                    material: inst.mat(member),
                }));
            }
        }
    }
    keys
}

pub fn build_global_model(scenario: &Scenario) -> Result<PpopModel, ModelError> {
    let mut model = build_base_lp(scenario)?;
    for key in all_group_keys(scenario) {
        model.add_group(scenario, key)?;
    }
    Ok(model)
}
