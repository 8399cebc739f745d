use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::coverage::{
    default_cdf_levels, delta_power_map, empirical_cdf, roi_area, roi_reduction, threshold_map,
    CdfCurve, DeltaStats,
};
use crate::ems::{local_angles, AnglePair, EmsPanel};
use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::propagation::{GridEvaluator, PowerGrid};
use crate::scenario::{supporting_face, AccessPoint, PhaseProfile, Region, Scenario};

/// Side length and cell count of one swept panel; the pitch is `side_m / cells`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PanelSize {
    pub side_m: f64,
    pub cells: usize,
}

impl PanelSize {
    pub fn new(side_m: f64, cells: usize) -> Self {
        Self { side_m, cells }
    }

    /// Size with `round(side / pitch)` cells.
    pub fn from_pitch(side_m: f64, pitch: f64) -> Self {
        Self {
            side_m,
            cells: (side_m / pitch).round().max(1.0) as usize,
        }
    }

    pub fn pitch(&self) -> f64 {
        self.side_m / self.cells as f64
    }
}

/// Bundled sweep sizes (m, cells).
pub const DEFAULT_PANEL_SIZES: [(f64, usize); 5] =
    [(0.28, 10), (0.40, 15), (0.55, 20), (0.66, 24), (0.80, 30)];

pub fn default_panel_sizes() -> Vec<PanelSize> {
    DEFAULT_PANEL_SIZES
        .iter()
        .map(|&(l, n)| PanelSize::new(l, n))
        .collect()
}

/// Below-threshold area, CDF at the threshold, and the reduction against a
/// reference area for one grid over one region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegionCoverage {
    pub lambda: f64,
    /// `None` when the reference has no below-threshold cells.
    pub rho: Option<f64>,
    pub theta_th: f64,
}

fn region_coverage(
    grid: &PowerGrid,
    region: &Region,
    p_th: f64,
    lambda_ref: f64,
) -> Result<RegionCoverage> {
    let lambda = roi_area(&threshold_map(grid, p_th), region, grid.spacing)?;
    let theta_th = empirical_cdf(grid, region, &[p_th])?.theta[0];
    let rho = if lambda_ref > 0.0 {
        Some(roi_reduction(lambda_ref, lambda)?)
    } else {
        None
    };
    Ok(RegionCoverage {
        lambda,
        rho,
        theta_th,
    })
}

fn region_delta(seme: &PowerGrid, reference: &PowerGrid, region: &Region) -> Result<DeltaStats> {
    let (map, _) = delta_power_map(seme, reference)?;
    map.stats(Some(&region.id))
        .ok_or_else(|| Error::EmptyRegion(region.id.clone()))
}

fn reference_area(reference: &PowerGrid, region: &Region, p_th: f64) -> Result<f64> {
    roi_area(&threshold_map(reference, p_th), region, reference.spacing)
}

/// Every scenario panel built, with `replace` substituted for the one whose
/// id matches.
fn panels_with(s: &Scenario, replace: &EmsPanel) -> Result<Vec<EmsPanel>> {
    s.ems_panels
        .iter()
        .map(|p| {
            if p.id == replace.spec.id {
                Ok(replace.clone())
            } else {
                EmsPanel::from_spec(p, s)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SizeSweepRow {
    pub side_m: f64,
    pub cells: usize,
    pub lambda_ref: f64,
    pub lambda_seme: f64,
    pub rho: Option<f64>,
    pub delta_stats: DeltaStats,
    pub theta_th: f64,
}

/// Re-synthesizes the panel at each size and evaluates its coverage over the
/// region it serves. Rows keep the input order.
pub fn size_sweep(
    base: &Scenario,
    panel_id: &str,
    sizes: &[PanelSize],
) -> Result<Vec<SizeSweepRow>> {
    let spec = base.panel(panel_id)?;
    if matches!(spec.phase_profile, PhaseProfile::Explicit(_)) {
        return Err(Error::Domain(format!(
            "panel {panel_id} has an explicit phase profile; size sweep needs a synthesized one"
        )));
    }
    for s in sizes {
        if !(s.side_m > 0.0) || s.cells == 0 {
            return Err(Error::Domain(format!(
                "invalid panel size {} m with {} cells",
                s.side_m, s.cells
            )));
        }
    }
    if sizes.is_empty() {
        return Ok(Vec::new());
    }
    let region = base.region_for_panel(panel_id)?;
    let p_th = base.rt.threshold_dbm;
    let eval = GridEvaluator::new(base)?;
    let reference = eval.reference();
    let lambda_ref = reference_area(&reference, region, p_th)?;
    sizes
        .par_iter()
        .map(|size| {
            let mut spec = spec.clone();
            spec.cells_per_side = size.cells;
            spec.cell_pitch_m = Some(size.pitch());
            let panel = EmsPanel::from_spec(&spec, base)?;
            let grid = eval.with_panels(&panels_with(base, &panel)?);
            let cov = region_coverage(&grid, region, p_th, lambda_ref)?;
            Ok(SizeSweepRow {
                side_m: size.side_m,
                cells: size.cells,
                lambda_ref,
                lambda_seme: cov.lambda,
                rho: cov.rho,
                delta_stats: region_delta(&grid, &reference, region)?,
                theta_th: cov.theta_th,
            })
        })
        .collect()
}

/// CSV with header
/// `L_m,N,lambda_seme_m2,rho_pct,dp_min_db,dp_max_db,dp_avg_db,dp_dev_db,theta_th_pct`.
pub fn write_size_sweep_csv(rows: &[SizeSweepRow], path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(
        w,
        "L_m,N,lambda_seme_m2,rho_pct,dp_min_db,dp_max_db,dp_avg_db,dp_dev_db,theta_th_pct"
    )?;
    for r in rows {
        let d = &r.delta_stats;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.side_m,
            r.cells,
            r.lambda_seme,
            r.rho.map(|v| (v * 100.0).to_string()).unwrap_or_default(),
            d.min,
            d.max,
            d.avg,
            d.dev,
            r.theta_th * 100.0
        )?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityCell {
    pub dy: f64,
    pub dz: f64,
    /// False when the offset moves the panel off its supporting wall face.
    pub valid: bool,
    pub lambda_seme: Option<f64>,
    pub rho: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceCdf {
    pub dy: f64,
    pub dz: f64,
    pub cdf: CdfCurve,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SensitivityMap {
    pub dy: Vec<f64>,
    pub dz: Vec<f64>,
    pub lambda_ref: f64,
    /// Row-major over `dz` then `dy` (dy varies fastest).
    pub cells: Vec<SensitivityCell>,
    /// CDFs of the valid offsets with `dz = 0` and with `dy = 0`.
    pub slices: Vec<SliceCdf>,
}

impl SensitivityMap {
    pub fn cell(&self, dy: f64, dz: f64) -> Option<&SensitivityCell> {
        self.cells.iter().find(|c| c.dy == dy && c.dz == dz)
    }

    /// Smallest reduction over the valid offsets.
    pub fn min_rho(&self) -> Option<f64> {
        self.cells
            .iter()
            .filter_map(|c| c.rho)
            .min_by(f64::total_cmp)
    }

    /// CSV with header `dy_m,dz_m,valid,lambda_seme_m2,rho_pct`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "dy_m,dz_m,valid,lambda_seme_m2,rho_pct")?;
        for c in &self.cells {
            writeln!(
                w,
                "{},{},{},{},{}",
                c.dy,
                c.dz,
                c.valid,
                c.lambda_seme.map(|v| v.to_string()).unwrap_or_default(),
                c.rho.map(|v| (v * 100.0).to_string()).unwrap_or_default()
            )?;
        }
        w.flush()?;
        Ok(())
    }

    /// Slice CDFs in long form: `dy_m,dz_m,p_hat_dbm,theta`.
    pub fn write_slices_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "dy_m,dz_m,p_hat_dbm,theta")?;
        for s in &self.slices {
            for (p, t) in s.cdf.p_hat.iter().zip(&s.cdf.theta) {
                writeln!(w, "{},{},{p},{t}", s.dy, s.dz)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// In-plane displacement of a panel: `dy` along its horizontal axis, `dz`
/// along its vertical axis.
pub fn panel_offset(spec: &crate::scenario::EmsPanelSpec, dy: f64, dz: f64) -> Vec3 {
    spec.local_x_axis * dy + spec.local_y_axis() * dz
}

/// Moves the panel across its wall with the nominal phase profile held fixed
/// and recomputes the reduction at every offset.
pub fn sensitivity_sweep(
    base: &Scenario,
    panel_id: &str,
    dy_range: &[f64],
    dz_range: &[f64],
) -> Result<SensitivityMap> {
    if !dy_range.contains(&0.0) || !dz_range.contains(&0.0) {
        return Err(Error::Domain("offset ranges must include 0".into()));
    }
    let spec = base.panel(panel_id)?;
    let region = base.region_for_panel(panel_id)?;
    let p_th = base.rt.threshold_dbm;
    let eval = GridEvaluator::new(base)?;
    let reference = eval.reference();
    let lambda_ref = reference_area(&reference, region, p_th)?;
    let nominal = EmsPanel::from_spec(spec, base)?;
    let levels = default_cdf_levels();

    let offsets: Vec<(f64, f64)> = dz_range
        .iter()
        .flat_map(|&dz| dy_range.iter().map(move |&dy| (dy, dz)))
        .collect();
    let results: Vec<(SensitivityCell, Option<CdfCurve>)> = offsets
        .par_iter()
        .map(|&(dy, dz)| {
            let panel = if dy == 0.0 && dz == 0.0 {
                nominal.clone()
            } else {
                nominal.translated(panel_offset(spec, dy, dz))
            };
            if supporting_face(&panel.spec, eval.faces()).is_none() {
                let cell = SensitivityCell {
                    dy,
                    dz,
                    valid: false,
                    lambda_seme: None,
                    rho: None,
                };
                return Ok((cell, None));
            }
            let grid = eval.with_panels(&panels_with(base, &panel)?);
            let cov = region_coverage(&grid, region, p_th, lambda_ref)?;
            let cdf = if dy == 0.0 || dz == 0.0 {
                Some(empirical_cdf(&grid, region, &levels)?)
            } else {
                None
            };
            let cell = SensitivityCell {
                dy,
                dz,
                valid: true,
                lambda_seme: Some(cov.lambda),
                rho: cov.rho,
            };
            Ok((cell, cdf))
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::with_capacity(results.len());
    let mut row = Vec::new();
    let mut col = Vec::new();
    for (cell, cdf) in results {
        if let Some(cdf) = cdf {
            let s = SliceCdf {
                dy: cell.dy,
                dz: cell.dz,
                cdf,
            };
            if cell.dz == 0.0 {
                row.push(s.clone());
            }
            if cell.dy == 0.0 && cell.dz != 0.0 {
                col.push(s);
            }
        }
        cells.push(cell);
    }
    row.extend(col);
    Ok(SensitivityMap {
        dy: dy_range.to_vec(),
        dz: dz_range.to_vec(),
        lambda_ref,
        cells,
        slices: row,
    })
}

/// Change of the incidence and reflection angles (degrees) when the panel is
/// displaced by `(dy, dz)` in its plane, source and focus held fixed.
pub fn angle_deltas(
    spec: &crate::scenario::EmsPanelSpec,
    source: Vec3,
    focus: Vec3,
    dy: f64,
    dz: f64,
) -> Result<(AnglePair, AnglePair)> {
    let mut moved = spec.clone();
    moved.barycenter += panel_offset(spec, dy, dz);
    let diff = |a: AnglePair, b: AnglePair| {
        let dphi = (b.phi - a.phi + 540.0).rem_euclid(360.0) - 180.0;
        AnglePair::new(b.theta - a.theta, dphi)
    };
    let inc = diff(local_angles(source, spec)?, local_angles(source, &moved)?);
    let refl = diff(local_angles(focus, spec)?, local_angles(focus, &moved)?);
    Ok((inc, refl))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StdComparison {
    pub region: String,
    pub lambda_ref: f64,
    pub seme: RegionCoverage,
    pub std: RegionCoverage,
    /// Set when the reference grid has no below-threshold cells, leaving both
    /// reductions undefined.
    pub no_roi: bool,
}

/// Compares the scenario's panels against adding `extra_ap` instead (panels
/// off), over the region served by the first panel.
pub fn std_comparison(base: &Scenario, extra_ap: &AccessPoint) -> Result<StdComparison> {
    if base.access_points.iter().any(|a| a.id == extra_ap.id) {
        return Err(Error::Domain(format!(
            "access point id {} already in use",
            extra_ap.id
        )));
    }
    let region = base.primary_region()?;
    let p_th = base.rt.threshold_dbm;
    let eval = GridEvaluator::new(base)?;
    let reference = eval.reference();
    let lambda_ref = reference_area(&reference, region, p_th)?;
    let panels = base
        .ems_panels
        .iter()
        .map(|p| EmsPanel::from_spec(p, base))
        .collect::<Result<Vec<_>>>()?;
    let seme_grid = eval.with_panels(&panels);

    let mut std_scenario = base.clone();
    std_scenario.ems_panels.clear();
    std_scenario.access_points.push(extra_ap.clone());
    let std_grid = GridEvaluator::new(&std_scenario)?.reference();

    Ok(StdComparison {
        region: region.id.clone(),
        lambda_ref,
        seme: region_coverage(&seme_grid, region, p_th, lambda_ref)?,
        std: region_coverage(&std_grid, region, p_th, lambda_ref)?,
        no_roi: lambda_ref == 0.0,
    })
}
