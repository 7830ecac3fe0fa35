//! Purchase and production planning models and their solution methods.

mod builder;
mod encoding;
mod engine;
mod error;
pub mod fixtures;
pub mod lab;
mod model;
mod pwl;
pub mod reductions;
pub mod synth;

pub use builder::{
    breakpoints, build_base_lp, extract_solution, max_balance_residual, objective_components,
    recipe_flows, AltKey, Components, PpopModel, RecipeFlows, Solution, VarIndex,
};
pub use encoding::{all_group_keys, big_m_for_moq, big_m_for_mpa, build_global_model, ConstraintGroup, GroupKey};
pub use engine::{
    check_violations, satisfies_disjunctions, solve, solve_global, solve_global_with, solve_iterative,
    solve_iterative_with, solve_with, IterationRecord, Method, SolveReport, ViolationSet, LEVEL_EPSILON,
    MOQ_TOLERANCE, MPA_RATIO_TOLERANCE,
};
pub use error::ModelError;
pub use model::{
    validate_instance, AlternativeGroup, Flow, Instance, Material, Recipe, Scenario, StockBatch, Violation, Weights,
    DEFAULT_BIG_M, DEFAULT_EXPONENT_SCALE, DEFAULT_MPA_RATIO,
};
pub use pwl::{envelope, pwl_breakpoints, pwl_cuts, PwlBreakpoints, PwlCut};

pub use carveopt_solver as solver;
