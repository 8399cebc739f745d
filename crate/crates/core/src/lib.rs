//! Indoor Wi-Fi coverage prediction with static-passive electromagnetic
//! skins.
//!
//! A [`Scenario`] describes walls, access points, skins, and the regions to
//! sample. [`propagation`] traces image-method paths and produces received
//! power grids, [`ems`] models the skins, and [`coverage`] / [`analysis`]
//! turn grids into coverage metrics and campaign reports.

// `!(x > 0.0)` style guards are kept so NaN is rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod coverage;
pub mod ems;
pub mod error;
pub mod geometry;
pub mod propagation;
pub mod scenario;

pub use error::{Error, Result};
pub use geometry::Vec3;
pub use propagation::{simulate_grid, GridEvaluator, PowerGrid};
pub use scenario::{load_scenario, Scenario};
