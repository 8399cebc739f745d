//! Multipath tracing and received-power evaluation.

pub mod field;
mod grid;
mod tracer;

pub use field::{
    path_field, received_power, received_power_watts, ComplexField, FREE_SPACE_IMPEDANCE,
    POWER_FLOOR_DBM,
};
pub use grid::{simulate_grid, GridEvaluator, GridMeta, GridPoint, PowerGrid};
pub use tracer::{trace_paths, ImageTree, Interaction, InteractionKind, RayPath, Tracer};
