//! File formats, command line and HTTP service for the planning engine.

pub mod cli;
pub mod document;
pub mod request;
pub mod service;
pub mod sweep;

pub use document::{
    parse_instance, serialize_instance, InfeasibleDocument, InstanceDocument, InstanceMetadata, ParseError,
    ScenarioDefaults, SolutionDocument,
};
pub use request::{MethodName, ScenarioParams};
pub use service::{router, ServiceConfig};
