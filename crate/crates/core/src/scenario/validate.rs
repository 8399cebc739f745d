use std::collections::HashSet;
use std::fmt;

use serde::Serialize;

use super::{
    AccessPoint, AntennaPattern, EmsPanelSpec, PatternKind, PhaseProfile, ReflectionMode, Scenario,
    MAX_REFLECTIONS_LIMIT, MAX_TRANSMISSIONS_LIMIT,
};
use crate::geometry::{line_of_sight, polygon_area, polygon_self_intersects, Vec3, WallFace};

/// Maximum distance between a panel barycenter and its supporting wall (m).
pub const PANEL_WALL_TOLERANCE: f64 = 0.05;

const ORTHONORMAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    /// Offending entity, e.g. `panel S_A`.
    pub entity: String,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sev = match self.severity {
            Severity::Error => "error",
            Severity::Warning => "warning",
        };
        write!(f, "{sev} [{}]: {}", self.entity, self.message)
    }
}

struct Collector(Vec<Diagnostic>);

impl Collector {
    fn error(&mut self, entity: String, message: impl Into<String>) {
        self.0.push(Diagnostic {
            severity: Severity::Error,
            entity,
            message: message.into(),
        });
    }

    fn warning(&mut self, entity: String, message: impl Into<String>) {
        self.0.push(Diagnostic {
            severity: Severity::Warning,
            entity,
            message: message.into(),
        });
    }
}

/// Checks every scenario invariant. Returns an empty list when all hold.
pub fn validate_scenario(s: &Scenario) -> Vec<Diagnostic> {
    let mut out = Collector(Vec::new());
    check_ids(s, &mut out);

    for m in &s.materials {
        let e = format!("material {}", m.name);
        if !(m.relative_permittivity >= 1.0) {
            out.error(e.clone(), "relative_permittivity must be >= 1");
        }
        if !(m.transmission_loss_db >= 0.0) || !m.transmission_loss_db.is_finite() {
            out.error(e.clone(), "transmission_loss_db must be finite and >= 0");
        }
        if m.reflection_mode == ReflectionMode::Fixed
            && !(0.0..=1.0).contains(&m.fixed_reflection_magnitude)
        {
            out.error(e, "fixed_reflection_magnitude must lie in [0, 1]");
        }
    }

    for w in &s.walls {
        let e = format!("wall {}", w.id);
        if !(w.top_height_m > w.base_height_m) {
            out.error(e.clone(), "top_height_m must exceed base_height_m");
        }
        if w.footprint.len() < 2 {
            out.error(e.clone(), "footprint needs at least 2 points");
        }
        if w.footprint.windows(2).any(|p| p[0] == p[1]) {
            out.error(e.clone(), "footprint has repeated consecutive points");
        }
        if w.footprint.iter().flatten().any(|c| !c.is_finite()) {
            out.error(e.clone(), "footprint coordinates must be finite");
        }
        if s.material(&w.material).is_none() {
            out.error(e, format!("unknown material `{}`", w.material));
        }
    }

    let bbox = scenario_bounds(s);
    for ap in &s.access_points {
        check_ap(ap, bbox, &mut out);
    }

    let faces = s.faces();
    for p in &s.ems_panels {
        check_panel(s, p, &faces, &mut out);
    }

    for r in &s.regions {
        let e = format!("region {}", r.id);
        if r.polygon.len() < 3 {
            out.error(e.clone(), "polygon needs at least 3 points");
        } else if polygon_self_intersects(&r.polygon) {
            out.error(e.clone(), "polygon is self-intersecting");
        } else if !(polygon_area(&r.polygon) > 0.0) {
            out.error(e.clone(), "polygon area must be positive");
        }
        if !r.eval_height_m.is_finite() {
            out.error(e, "eval_height_m must be finite");
        }
    }

    if !(s.grid.spacing_m > 0.0) || !s.grid.spacing_m.is_finite() {
        out.error("grid".into(), "spacing_m must be positive");
    }
    if !s.grid.height_m.is_finite() {
        out.error("grid".into(), "height_m must be finite");
    }
    if s.rt.max_reflections > MAX_REFLECTIONS_LIMIT {
        out.error(
            "rt".into(),
            format!("max_reflections must be <= {MAX_REFLECTIONS_LIMIT}"),
        );
    }
    if s.rt.max_transmissions > MAX_TRANSMISSIONS_LIMIT {
        out.error(
            "rt".into(),
            format!("max_transmissions must be <= {MAX_TRANSMISSIONS_LIMIT}"),
        );
    }
    if !s.rt.threshold_dbm.is_finite() {
        out.error("rt".into(), "threshold_dbm must be finite");
    }
    if !s.rt.rx_gain_dbi.is_finite() {
        out.error("rt".into(), "rx_gain_dbi must be finite");
    }
    out.0
}

fn check_ids(s: &Scenario, out: &mut Collector) {
    let mut seen = HashSet::new();
    let ids = s
        .walls
        .iter()
        .map(|w| ("wall", &w.id))
        .chain(s.access_points.iter().map(|a| ("access point", &a.id)))
        .chain(s.ems_panels.iter().map(|p| ("panel", &p.id)))
        .chain(s.regions.iter().map(|r| ("region", &r.id)));
    for (kind, id) in ids {
        if !seen.insert(id.as_str()) {
            out.error(format!("{kind} {id}"), "duplicate id");
        }
    }
    let mut names = HashSet::new();
    for m in &s.materials {
        if !names.insert(m.name.as_str()) {
            out.error(format!("material {}", m.name), "duplicate material name");
        }
    }
}

/// Axis-aligned bounds of walls and regions, `None` in free space.
fn scenario_bounds(s: &Scenario) -> Option<(Vec3, Vec3)> {
    if s.walls.is_empty() {
        return None;
    }
    let mut lo = Vec3::new(f64::INFINITY, f64::INFINITY, f64::INFINITY);
    let mut hi = -lo;
    let mut grow = |x: f64, y: f64, z: f64| {
        lo = Vec3::new(lo.x.min(x), lo.y.min(y), lo.z.min(z));
        hi = Vec3::new(hi.x.max(x), hi.y.max(y), hi.z.max(z));
    };
    for w in &s.walls {
        for &[x, y] in &w.footprint {
            grow(x, y, w.base_height_m);
            grow(x, y, w.top_height_m);
        }
    }
    for r in &s.regions {
        for &[x, y] in &r.polygon {
            grow(x, y, r.eval_height_m);
        }
    }
    Some((lo, hi))
}

fn check_ap(ap: &AccessPoint, bbox: Option<(Vec3, Vec3)>, out: &mut Collector) {
    let e = format!("access point {}", ap.id);
    if !(ap.frequency_hz > 0.0) || !ap.frequency_hz.is_finite() {
        out.error(e.clone(), "frequency_hz must be positive");
    }
    if !ap.tx_power_dbm.is_finite() {
        out.error(e.clone(), "tx_power_dbm must be finite");
    }
    if !ap.position.is_finite() {
        out.error(e.clone(), "position must be finite");
    } else if let Some((lo, hi)) = bbox {
        let p = ap.position;
        let tol = 1e-6;
        let inside = p.x >= lo.x - tol
            && p.x <= hi.x + tol
            && p.y >= lo.y - tol
            && p.y <= hi.y + tol
            && p.z >= lo.z - tol
            && p.z <= hi.z + tol;
        if !inside {
            out.error(e.clone(), "position lies outside the scenario bounding box");
        }
    }
    check_pattern(&ap.pattern, &e, out);
}

fn check_pattern(p: &AntennaPattern, e: &str, out: &mut Collector) {
    if !p.peak_gain_dbi.is_finite() {
        out.error(e.to_string(), "peak_gain_dbi must be finite");
    }
    if p.kind != PatternKind::Tabulated {
        return;
    }
    let Some(t) = &p.table else {
        out.error(e.to_string(), "tabulated pattern requires a table");
        return;
    };
    let ascending = |a: &[f64]| a.windows(2).all(|w| w[0] < w[1]);
    let covers = |a: &[f64], lo: f64, hi: f64| {
        a.first().is_some_and(|&v| v <= lo) && a.last().is_some_and(|&v| v >= hi)
    };
    if !ascending(&t.theta_deg) || !covers(&t.theta_deg, 0.0, 180.0) {
        out.error(
            e.to_string(),
            "table theta_deg must ascend and cover [0, 180]",
        );
    }
    if !ascending(&t.phi_deg) || !covers(&t.phi_deg, -180.0, 180.0) {
        out.error(
            e.to_string(),
            "table phi_deg must ascend and cover [-180, 180]",
        );
    }
    let shape_ok = t.gain_dbi.len() == t.theta_deg.len()
        && t.gain_dbi.iter().all(|r| r.len() == t.phi_deg.len());
    if !shape_ok {
        out.error(
            e.to_string(),
            "table gain_dbi shape does not match its axes",
        );
    }
    if t.gain_dbi.iter().flatten().any(|g| !g.is_finite()) {
        out.error(e.to_string(), "table gain values must be finite");
    }
}

/// Face supporting a panel: within [`PANEL_WALL_TOLERANCE`], parallel, with
/// the barycenter projecting inside it and lying on the normal's side.
pub fn supporting_face<'a>(p: &EmsPanelSpec, faces: &'a [WallFace]) -> Option<&'a WallFace> {
    let n = p.normal.normalized();
    faces.iter().find(|f| {
        let fnorm = f.normal();
        let dist = f.signed_distance(p.barycenter);
        dist.abs() <= PANEL_WALL_TOLERANCE
            && fnorm.dot(n).abs() > 1.0 - 1e-6
            && f.contains_projection(p.barycenter)
            // barycenter in front of (or on) the face along the panel normal
            && dist * fnorm.dot(n) >= -1e-9
    })
}

fn check_panel(s: &Scenario, p: &EmsPanelSpec, faces: &[WallFace], out: &mut Collector) {
    let e = format!("panel {}", p.id);
    let n = p.normal;
    let x = p.local_x_axis;
    if (n.norm() - 1.0).abs() > ORTHONORMAL_TOL || (x.norm() - 1.0).abs() > ORTHONORMAL_TOL {
        out.error(e.clone(), "normal and local_x_axis must be unit vectors");
    }
    if n.dot(x).abs() > ORTHONORMAL_TOL {
        out.error(e.clone(), "normal and local_x_axis must be orthogonal");
    }
    if p.cells_per_side == 0 {
        out.error(e.clone(), "cells_per_side must be >= 1");
    }
    match p.cell_pitch_m {
        Some(l) if l > 0.0 && l.is_finite() => {}
        Some(_) => out.error(e.clone(), "cell_pitch_m must be positive"),
        None => out.error(
            e.clone(),
            "cell pitch unresolved (no access point to derive it from)",
        ),
    }
    if !(0.0..=1.0).contains(&p.reflection_amplitude) {
        out.error(e.clone(), "reflection_amplitude must lie in [0, 1]");
    }
    if !p.barycenter.is_finite() {
        out.error(e.clone(), "barycenter must be finite");
        return;
    }
    if supporting_face(p, faces).is_none() {
        out.error(
            e.clone(),
            format!(
                "barycenter is not within {PANEL_WALL_TOLERANCE} m of a wall face it faces away from"
            ),
        );
    }
    match &p.phase_profile {
        PhaseProfile::Explicit(m) => {
            if m.dim() != (p.cells_per_side, p.cells_per_side) {
                out.error(
                    e,
                    format!("explicit phase matrix must be {0}x{0}", p.cells_per_side),
                );
            }
        }
        PhaseProfile::Synthesized { source_ap, focus } => {
            let Ok(ap) = s.access_point(source_ap) else {
                out.error(e, format!("unknown source access point `{source_ap}`"));
                return;
            };
            let nn = n.normalized();
            if (ap.position - p.barycenter).dot(nn) <= 0.0
                || !line_of_sight(ap.position, p.barycenter, faces)
            {
                out.warning(e.clone(), "no LOS to source access point");
            }
            if (*focus - p.barycenter).dot(nn) <= 0.0 || !line_of_sight(p.barycenter, *focus, faces)
            {
                out.warning(e, "no LOS to focus");
            }
        }
    }
}
