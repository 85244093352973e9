//! Vehicle routing with time windows, static and dynamic: an event-driven
//! fleet simulator, a value-based dispatcher trained by experience replay,
//! a genetic-algorithm baseline and an exact oracle with a MILP exporter.

pub mod agent;
pub mod bench;
pub mod config;
pub mod env;
pub mod error;
pub mod exact;
pub mod features;
pub mod ga;
pub mod instance_io;
pub mod model;
pub mod reward;
pub mod valuenet;

pub use error::{ContractError, FormatError, ModelError};
pub use model::{
    distance, route_metrics, validate_solution, Constraint, Customer, FleetSpec, Instance, Location, Route,
    RouteMetrics, Solution, ValidationReport, Violation, Visit,
};
