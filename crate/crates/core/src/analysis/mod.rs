//! Campaign-level studies built on the grid evaluator: panel size and
//! placement sweeps, the second-AP comparison, and cost of ownership.

mod sweeps;
mod tco;

pub use sweeps::{
    angle_deltas, default_panel_sizes, panel_offset, sensitivity_sweep, size_sweep, std_comparison,
    write_size_sweep_csv, PanelSize, RegionCoverage, SensitivityCell, SensitivityMap, SizeSweepRow,
    SliceCdf, StdComparison, DEFAULT_PANEL_SIZES,
};
pub use tco::{tco_compare, tco_total, TcoInputs, TcoModel, TcoReport};
