//! Received-power maps over the region lattice.
//!
//! The lattice is the set of cell centers `((i + ½)δ, (j + ½)δ)` covering the
//! bounding box of all regions; a point belongs to the first region whose
//! polygon contains it and is masked otherwise. Points are evaluated
//! independently and each point reduces its contributions in a fixed order
//! (paths in tracer order, then panels in scenario order), so the output is
//! bit-identical for any thread count.

use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use super::field::{
    aperture_factor, path_field, reflection_coefficient, transmission_coefficient, watts_to_dbm,
};
use super::tracer::{ImageTree, Tracer};
use crate::ems::{EmsPanel, IlluminatedPanel};
use crate::error::{Error, Result};
use crate::geometry::{face_hit, line_of_sight, mirror_point, segment_hits, Vec3, WallFace};
use crate::scenario::{
    db_to_linear, validate_scenario, AccessPoint, Scenario, Severity, SummationMode,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridPoint {
    pub position: Vec3,
    pub region: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridMeta {
    pub frequency_hz: f64,
    pub settings_hash: u64,
}

/// Sampled received power (dBm), row-major with x varying fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowerGrid {
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
    pub points: Vec<GridPoint>,
    /// `None` for masked (out-of-region) points.
    pub values: Vec<Option<f64>>,
    pub meta: GridMeta,
}

impl PowerGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Values of the points tagged with `region`, in lattice order.
    pub fn region_values(&self, region: &str) -> Vec<f64> {
        self.points
            .iter()
            .zip(&self.values)
            .filter(|(p, _)| p.region.as_deref() == Some(region))
            .filter_map(|(_, v)| *v)
            .collect()
    }

    /// Same dimensions, positions, and mask.
    pub fn same_lattice(&self, other: &PowerGrid) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.points == other.points
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.is_some() == b.is_some())
    }
}

#[derive(Debug, Clone, Copy, Default)]
struct FieldSum {
    coherent: Complex64,
    incoherent: f64,
}

impl FieldSum {
    fn add(&mut self, e: Complex64) {
        self.coherent += e;
        self.incoherent += e.norm_sqr();
    }

    fn squared_field(&self, mode: SummationMode) -> f64 {
        match mode {
            SummationMode::Coherent => self.coherent.norm_sqr(),
            SummationMode::Incoherent => self.incoherent,
        }
    }
}

struct Lattice {
    spacing: f64,
    nx: usize,
    ny: usize,
    points: Vec<GridPoint>,
}

fn build_lattice(s: &Scenario) -> Result<Lattice> {
    if s.regions.is_empty() {
        return Err(Error::Domain("scenario has no regions to sample".into()));
    }
    let d = s.grid.spacing_m;
    let (mut x0, mut y0) = (f64::INFINITY, f64::INFINITY);
    let (mut x1, mut y1) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &[x, y] in s.regions.iter().flat_map(|r| &r.polygon) {
        x0 = x0.min(x);
        y0 = y0.min(y);
        x1 = x1.max(x);
        y1 = y1.max(y);
    }
    let (i0, i1) = ((x0 / d).floor() as i64, (x1 / d).ceil() as i64);
    let (j0, j1) = ((y0 / d).floor() as i64, (y1 / d).ceil() as i64);
    let nx = (i1 - i0).max(0) as usize;
    let ny = (j1 - j0).max(0) as usize;
    let mut points = Vec::with_capacity(nx * ny);
    for j in j0..j1 {
        let y = (j as f64 + 0.5) * d;
        for i in i0..i1 {
            let x = (i as f64 + 0.5) * d;
            let region = s.regions.iter().find(|r| r.contains(x, y));
            points.push(GridPoint {
                position: Vec3::new(x, y, region.map_or(s.grid.height_m, |r| r.eval_height_m)),
                region: region.map(|r| r.id.clone()),
            });
        }
    }
    Ok(Lattice {
        spacing: d,
        nx,
        ny,
        points,
    })
}

/// A panel lit by one AP (index into the scenario list).
struct PanelLink {
    lit: IlluminatedPanel,
    ap: usize,
}

/// Evaluates a scenario's lattice once and re-uses the AP-only fields for
/// any number of panel configurations.
pub struct GridEvaluator<'a> {
    scenario: &'a Scenario,
    tracer: Tracer,
    lattice: Lattice,
    /// Per point, per AP: sum of traced path fields. Empty for masked points.
    base: Vec<Vec<FieldSum>>,
    rx_gain: f64,
    settings_hash: u64,
}

impl<'a> GridEvaluator<'a> {
    pub fn new(scenario: &'a Scenario) -> Result<Self> {
        let errors: Vec<_> = validate_scenario(scenario)
            .into_iter()
            .filter(|d| d.severity == Severity::Error)
            .collect();
        if !errors.is_empty() {
            return Err(Error::Validation(errors));
        }
        let lattice = build_lattice(scenario)?;
        let tracer = Tracer::new(scenario);
        let trees: Vec<ImageTree> = scenario
            .access_points
            .iter()
            .map(|ap| tracer.image_tree(ap))
            .collect();
        let base = lattice
            .points
            .par_iter()
            .map(|p| {
                if p.region.is_none() {
                    return Vec::new();
                }
                scenario
                    .access_points
                    .iter()
                    .zip(&trees)
                    .map(|(ap, tree)| {
                        let mut sum = FieldSum::default();
                        if ap.position == p.position {
                            return sum;
                        }
                        for path in tracer.trace(tree, p.position) {
                            sum.add(path_field(&path, ap, tracer.faces()));
                        }
                        sum
                    })
                    .collect()
            })
            .collect();
        let mut h = DefaultHasher::new();
        scenario.to_json()?.hash(&mut h);
        Ok(Self {
            scenario,
            tracer,
            lattice,
            base,
            rx_gain: db_to_linear(scenario.rt.rx_gain_dbi),
            settings_hash: h.finish(),
        })
    }

    pub fn faces(&self) -> &[WallFace] {
        self.tracer.faces()
    }

    /// Grid without any panel.
    pub fn reference(&self) -> PowerGrid {
        self.evaluate_links(&[], self.settings_hash)
    }

    /// Grid with the given panels re-radiating every AP that sees them.
    pub fn with_panels(&self, panels: &[EmsPanel]) -> PowerGrid {
        let faces = self.faces();
        let mut links = Vec::new();
        for panel in panels {
            for (i, ap) in self.scenario.access_points.iter().enumerate() {
                let bary = panel.spec.barycenter;
                let lit_from_front = (ap.position - bary).dot(panel.normal()) > 0.0;
                if lit_from_front && line_of_sight(ap.position, bary, faces) {
                    links.push(PanelLink {
                        lit: IlluminatedPanel::new(panel, ap),
                        ap: i,
                    });
                }
            }
        }
        let mut h = DefaultHasher::new();
        self.settings_hash.hash(&mut h);
        panels.len().hash(&mut h);
        for p in panels {
            p.spec.id.hash(&mut h);
            p.spec.barycenter.x.to_bits().hash(&mut h);
            p.spec.barycenter.y.to_bits().hash(&mut h);
            p.spec.barycenter.z.to_bits().hash(&mut h);
            p.spec.cells_per_side.hash(&mut h);
        }
        self.evaluate_links(&links, h.finish())
    }

    fn evaluate_links(&self, links: &[PanelLink], hash: u64) -> PowerGrid {
        let s = self.scenario;
        let mode = s.rt.summation_mode;
        let multibounce = s.rt.include_ems_multibounce;
        let max_t = s.rt.max_transmissions;
        let faces = self.faces();
        let values = self
            .lattice
            .points
            .par_iter()
            .zip(&self.base)
            .map(|(p, sums)| {
                p.region.as_ref()?;
                let mut best = 0.0f64;
                for (i, (ap, sum)) in s.access_points.iter().zip(sums).enumerate() {
                    let mut sum = *sum;
                    for link in links.iter().filter(|l| l.ap == i) {
                        if let Some(e) = panel_direct(&link.lit, p.position, faces, max_t) {
                            sum.add(e);
                        }
                        if multibounce {
                            for e in panel_bounces(&link.lit, p.position, faces) {
                                sum.add(e);
                            }
                        }
                    }
                    let w =
                        aperture_factor(self.rx_gain, ap.wavelength()) * sum.squared_field(mode);
                    best = best.max(w);
                }
                Some(watts_to_dbm(best))
            })
            .collect();
        PowerGrid {
            spacing: self.lattice.spacing,
            nx: self.lattice.nx,
            ny: self.lattice.ny,
            points: self.lattice.points.clone(),
            values,
            meta: GridMeta {
                frequency_hz: s
                    .access_points
                    .first()
                    .map_or(f64::NAN, |a: &AccessPoint| a.frequency_hz),
                settings_hash: hash,
            },
        }
    }
}

/// Panel → receiver contribution, attenuated by every wall the leg crosses.
fn panel_direct(
    lit: &IlluminatedPanel,
    rx: Vec3,
    faces: &[WallFace],
    max_transmissions: usize,
) -> Option<Complex64> {
    if !lit.in_front(rx) {
        return None;
    }
    let hits = segment_hits(lit.barycenter(), rx, faces);
    if hits.len() > max_transmissions {
        return None;
    }
    let t: f64 = hits
        .iter()
        .map(|h| transmission_coefficient(&faces[h.face].material))
        .product();
    Some(lit.scatter(rx) * t)
}

/// Panel → wall → receiver contributions through each face's image of `rx`.
fn panel_bounces(lit: &IlluminatedPanel, rx: Vec3, faces: &[WallFace]) -> Vec<Complex64> {
    let bary = lit.barycenter();
    let mut out = Vec::new();
    for f in faces {
        let image = mirror_point(rx, f);
        if !lit.in_front(image) {
            continue;
        }
        let Some(hit) = face_hit(bary, image, f) else {
            continue;
        };
        let spec_pt = hit.point;
        if !line_of_sight(bary, spec_pt, faces) || !line_of_sight(spec_pt, rx, faces) {
            continue;
        }
        let gamma = reflection_coefficient(&f.material, hit.incidence_cosine);
        out.push(lit.scatter(image) * gamma);
    }
    out
}

/// Received-power map of a scenario, with or without its panels.
pub fn simulate_grid(s: &Scenario, panels_enabled: bool) -> Result<PowerGrid> {
    let eval = GridEvaluator::new(s)?;
    if !panels_enabled {
        return Ok(eval.reference());
    }
    let panels = s
        .ems_panels
        .iter()
        .map(|p| EmsPanel::from_spec(p, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(eval.with_panels(&panels))
}
