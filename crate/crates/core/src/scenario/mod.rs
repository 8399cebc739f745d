//! World model: materials, walls, access points, skins, regions, and solver
//! settings, plus the file formats used to load scenarios and store grids.
//!
//! A [`Scenario`] is plain immutable data once loaded. Cross references
//! (wall → material, panel → source AP) are stored by name and resolved on
//! demand; [`validate_scenario`] checks that every one of them resolves.

mod io;
mod validate;

use std::f64::consts::PI;
use std::path::Path;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{point_in_polygon, Vec3, WallFace};

pub use io::{read_power_grid, write_power_grid};
pub use validate::{
    supporting_face, validate_scenario, Diagnostic, Severity, PANEL_WALL_TOLERANCE,
};

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReflectionMode {
    Fresnel,
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Material {
    pub name: String,
    pub relative_permittivity: f64,
    /// Loss per wall traversal (dB).
    pub transmission_loss_db: f64,
    #[serde(default = "default_reflection_mode")]
    pub reflection_mode: ReflectionMode,
    /// Only used when `reflection_mode` is `fixed`.
    #[serde(default)]
    pub fixed_reflection_magnitude: f64,
}

fn default_reflection_mode() -> ReflectionMode {
    ReflectionMode::Fresnel
}

impl Material {
    pub fn fresnel(name: &str, relative_permittivity: f64, transmission_loss_db: f64) -> Self {
        Self {
            name: name.to_string(),
            relative_permittivity,
            transmission_loss_db,
            reflection_mode: ReflectionMode::Fresnel,
            fixed_reflection_magnitude: 0.0,
        }
    }

    /// Built-in materials available to every scenario. A scenario material
    /// with the same name takes precedence.
    pub fn defaults() -> Vec<Material> {
        vec![
            Material::fresnel("brick", 4.0, 8.0),
            Material::fresnel("concrete", 5.3, 12.0),
            Material::fresnel("glass", 6.0, 3.0),
            Material::fresnel("wood_door", 2.0, 4.0),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Wall {
    pub id: String,
    /// Floor-plan polyline (m).
    pub footprint: Vec<[f64; 2]>,
    pub base_height_m: f64,
    pub top_height_m: f64,
    pub material: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    Isotropic,
    AnalyticVerticalMonopole,
    Tabulated,
}

/// Gain samples on a regular (θ, φ) lattice; θ from the +z axis, φ from +x.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainTable {
    pub theta_deg: Vec<f64>,
    pub phi_deg: Vec<f64>,
    /// `gain_dbi[i][j]` at `(theta_deg[i], phi_deg[j])`.
    pub gain_dbi: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AntennaPattern {
    pub kind: PatternKind,
    #[serde(default)]
    pub peak_gain_dbi: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub table: Option<GainTable>,
}

impl AntennaPattern {
    pub fn isotropic() -> Self {
        Self {
            kind: PatternKind::Isotropic,
            peak_gain_dbi: 0.0,
            table: None,
        }
    }

    /// Half-wave-dipole donut, 2.15 dBi at the horizon.
    pub fn vertical_monopole() -> Self {
        Self {
            kind: PatternKind::AnalyticVerticalMonopole,
            peak_gain_dbi: 2.15,
            table: None,
        }
    }

    /// Linear power gain towards `dir` (need not be normalized).
    pub fn gain(&self, dir: Vec3) -> f64 {
        let dir = dir.normalized();
        match self.kind {
            PatternKind::Isotropic => db_to_linear(self.peak_gain_dbi),
            PatternKind::AnalyticVerticalMonopole => {
                let cos_t = dir.z.clamp(-1.0, 1.0);
                let sin_t = (1.0 - cos_t * cos_t).sqrt();
                let shape = if sin_t < 1e-12 {
                    0.0
                } else {
                    ((PI / 2.0 * cos_t).cos() / sin_t).powi(2)
                };
                db_to_linear(self.peak_gain_dbi) * shape
            }
            PatternKind::Tabulated => match &self.table {
                Some(t) => {
                    let theta = dir.z.clamp(-1.0, 1.0).acos().to_degrees();
                    let phi = dir.y.atan2(dir.x).to_degrees();
                    db_to_linear(t.interpolate(theta, phi))
                }
                None => 0.0,
            },
        }
    }
}

impl GainTable {
    /// Bilinear interpolation in (θ, φ), clamped to the table edges.
    pub fn interpolate(&self, theta: f64, phi: f64) -> f64 {
        let (i0, i1, ti) = bracket(&self.theta_deg, theta);
        let (j0, j1, tj) = bracket(&self.phi_deg, phi);
        let g = &self.gain_dbi;
        let a = g[i0][j0] * (1.0 - tj) + g[i0][j1] * tj;
        let b = g[i1][j0] * (1.0 - tj) + g[i1][j1] * tj;
        a * (1.0 - ti) + b * ti
    }
}

fn bracket(axis: &[f64], x: f64) -> (usize, usize, f64) {
    if axis.len() == 1 || x <= axis[0] {
        return (0, 0, 0.0);
    }
    let last = axis.len() - 1;
    if x >= axis[last] {
        return (last, last, 0.0);
    }
    let hi = axis.partition_point(|&a| a <= x).min(last);
    let lo = hi - 1;
    let t = (x - axis[lo]) / (axis[hi] - axis[lo]);
    (lo, hi, t)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AccessPoint {
    pub id: String,
    pub position: Vec3,
    pub tx_power_dbm: f64,
    pub frequency_hz: f64,
    #[serde(default)]
    pub channel: u32,
    pub pattern: AntennaPattern,
}

impl AccessPoint {
    pub fn wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.frequency_hz
    }

    pub fn tx_power_watts(&self) -> f64 {
        10f64.powf((self.tx_power_dbm - 30.0) / 10.0)
    }
}

/// How the reflection phase of a skin is obtained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "PhaseProfileRepr", into = "PhaseProfileRepr")]
pub enum PhaseProfile {
    /// Phase-conjugation focus from a source AP onto a focus point.
    Synthesized { source_ap: String, focus: Vec3 },
    /// Explicit per-cell phase, radians, indexed `[m, n]` along
    /// (local x, local vertical).
    Explicit(Array2<f64>),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum PhaseProfileRepr {
    Synthesized { source_ap: String, focus: Vec3 },
    Explicit { phase_deg: Vec<Vec<f64>> },
}

impl From<PhaseProfileRepr> for PhaseProfile {
    fn from(r: PhaseProfileRepr) -> Self {
        match r {
            PhaseProfileRepr::Synthesized { source_ap, focus } => {
                PhaseProfile::Synthesized { source_ap, focus }
            }
            PhaseProfileRepr::Explicit { phase_deg } => {
                let rows = phase_deg.len();
                let cols = phase_deg.first().map_or(0, Vec::len);
                // ragged input yields an empty matrix, rejected by validation
                let ragged = phase_deg.iter().any(|r| r.len() != cols);
                let flat: Vec<f64> = phase_deg
                    .into_iter()
                    .flatten()
                    .map(f64::to_radians)
                    .collect();
                let m = if ragged {
                    Array2::zeros((0, 0))
                } else {
                    Array2::from_shape_vec((rows, cols), flat)
                        .unwrap_or_else(|_| Array2::zeros((0, 0)))
                };
                PhaseProfile::Explicit(m)
            }
        }
    }
}

impl From<PhaseProfile> for PhaseProfileRepr {
    fn from(p: PhaseProfile) -> Self {
        match p {
            PhaseProfile::Synthesized { source_ap, focus } => {
                PhaseProfileRepr::Synthesized { source_ap, focus }
            }
            PhaseProfile::Explicit(m) => PhaseProfileRepr::Explicit {
                phase_deg: m
                    .rows()
                    .into_iter()
                    .map(|r| r.iter().map(|v| v.to_degrees()).collect())
                    .collect(),
            },
        }
    }
}

fn default_amplitude() -> f64 {
    0.9
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmsPanelSpec {
    pub id: String,
    pub barycenter: Vec3,
    pub normal: Vec3,
    /// Horizontal in-plane axis of the local frame.
    pub local_x_axis: Vec3,
    pub cells_per_side: usize,
    /// Unit-cell pitch; half a wavelength of the source AP when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_pitch_m: Option<f64>,
    #[serde(default = "default_amplitude")]
    pub reflection_amplitude: f64,
    pub phase_profile: PhaseProfile,
}

impl EmsPanelSpec {
    /// Vertical in-plane axis, `normal × local_x_axis`.
    pub fn local_y_axis(&self) -> Vec3 {
        self.normal.cross(self.local_x_axis)
    }

    pub fn side_length(&self) -> Option<f64> {
        self.cell_pitch_m.map(|p| p * self.cells_per_side as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Region {
    pub id: String,
    pub polygon: Vec<[f64; 2]>,
    pub eval_height_m: f64,
}

impl Region {
    pub fn contains(&self, x: f64, y: f64) -> bool {
        point_in_polygon(x, y, &self.polygon)
    }

    pub fn area(&self) -> f64 {
        crate::geometry::polygon_area(&self.polygon)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub spacing_m: f64,
    pub height_m: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            spacing_m: 0.25,
            height_m: 1.2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SummationMode {
    Incoherent,
    Coherent,
}

pub const MAX_REFLECTIONS_LIMIT: usize = 6;
pub const MAX_TRANSMISSIONS_LIMIT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RtSettings {
    pub max_reflections: usize,
    pub max_transmissions: usize,
    pub summation_mode: SummationMode,
    pub threshold_dbm: f64,
    pub include_ems_multibounce: bool,
    /// Receiver gain used in the received-power conversion.
    pub rx_gain_dbi: f64,
}

impl Default for RtSettings {
    fn default() -> Self {
        Self {
            max_reflections: 2,
            max_transmissions: 4,
            summation_mode: SummationMode::Incoherent,
            threshold_dbm: -65.0,
            include_ems_multibounce: false,
            rx_gain_dbi: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub materials: Vec<Material>,
    #[serde(default)]
    pub walls: Vec<Wall>,
    pub access_points: Vec<AccessPoint>,
    #[serde(default)]
    pub ems_panels: Vec<EmsPanelSpec>,
    #[serde(default)]
    pub regions: Vec<Region>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub rt: RtSettings,
}

impl Scenario {
    /// Scenario with no walls, panels, or regions.
    pub fn free_space(aps: Vec<AccessPoint>) -> Self {
        Self {
            materials: Vec::new(),
            walls: Vec::new(),
            access_points: aps,
            ems_panels: Vec::new(),
            regions: Vec::new(),
            grid: GridSpec::default(),
            rt: RtSettings::default(),
        }
    }

    /// Parses a scenario document without validating it. Panels without an
    /// explicit pitch get half a wavelength of their source AP.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut s: Scenario = serde_json::from_str(text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        s.resolve_default_pitch();
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    fn resolve_default_pitch(&mut self) {
        let fallback = self.access_points.first().map(AccessPoint::wavelength);
        for i in 0..self.ems_panels.len() {
            if self.ems_panels[i].cell_pitch_m.is_some() {
                continue;
            }
            let lambda = match &self.ems_panels[i].phase_profile {
                PhaseProfile::Synthesized { source_ap, .. } => self
                    .access_point(source_ap)
                    .map(AccessPoint::wavelength)
                    .ok(),
                PhaseProfile::Explicit(_) => None,
            }
            .or(fallback);
            self.ems_panels[i].cell_pitch_m = lambda.map(|l| l / 2.0);
        }
    }

    /// Resolves a material name against the scenario list, then the defaults.
    pub fn material(&self, name: &str) -> Option<Material> {
        self.materials
            .iter()
            .find(|m| m.name == name)
            .cloned()
            .or_else(|| Material::defaults().into_iter().find(|m| m.name == name))
    }

    pub fn access_point(&self, id: &str) -> Result<&AccessPoint> {
        self.access_points
            .iter()
            .find(|a| a.id == id)
            .ok_or_else(|| Error::unknown("access point", id))
    }

    pub fn panel(&self, id: &str) -> Result<&EmsPanelSpec> {
        self.ems_panels
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| Error::unknown("panel", id))
    }

    pub fn panel_mut(&mut self, id: &str) -> Result<&mut EmsPanelSpec> {
        self.ems_panels
            .iter_mut()
            .find(|p| p.id == id)
            .ok_or_else(|| Error::unknown("panel", id))
    }

    pub fn region(&self, id: &str) -> Result<&Region> {
        self.regions
            .iter()
            .find(|r| r.id == id)
            .ok_or_else(|| Error::unknown("region", id))
    }

    /// Region a panel serves: the one containing its focus point, otherwise
    /// the first region.
    pub fn region_for_panel(&self, panel_id: &str) -> Result<&Region> {
        let panel = self.panel(panel_id)?;
        if let PhaseProfile::Synthesized { focus, .. } = &panel.phase_profile {
            if let Some(r) = self.regions.iter().find(|r| r.contains(focus.x, focus.y)) {
                return Ok(r);
            }
        }
        self.regions
            .first()
            .ok_or_else(|| Error::Domain("scenario has no regions".into()))
    }

    /// Region used for scenario-level reports: the region served by the first
    /// panel, or the first region when there are no panels.
    pub fn primary_region(&self) -> Result<&Region> {
        match self.ems_panels.first() {
            Some(p) => self.region_for_panel(&p.id),
            None => self
                .regions
                .first()
                .ok_or_else(|| Error::Domain("scenario has no regions".into())),
        }
    }

    /// Decomposes every wall polyline into vertical rectangular faces.
    /// Walls with an unresolved material are skipped; validation reports them.
    pub fn faces(&self) -> Vec<WallFace> {
        let mut faces = Vec::new();
        for wall in &self.walls {
            let Some(material) = self.material(&wall.material) else {
                continue;
            };
            let height = wall.top_height_m - wall.base_height_m;
            for seg in wall.footprint.windows(2) {
                let [x0, y0] = seg[0];
                let [x1, y1] = seg[1];
                if x0 == x1 && y0 == y1 {
                    continue;
                }
                faces.push(WallFace::new(
                    faces.len(),
                    Vec3::new(x0, y0, wall.base_height_m),
                    Vec3::new(x1 - x0, y1 - y0, 0.0),
                    Vec3::new(0.0, 0.0, height),
                    material.clone(),
                    wall.id.clone(),
                ));
            }
        }
        faces
    }
}

/// Reads, parses, and validates a scenario file.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let text = std::fs::read_to_string(path)?;
    let s = Scenario::from_json(&text)?;
    let errors: Vec<Diagnostic> = validate_scenario(&s)
        .into_iter()
        .filter(|d| d.severity == Severity::Error)
        .collect();
    if errors.is_empty() {
        Ok(s)
    } else {
        Err(Error::Validation(errors))
    }
}
