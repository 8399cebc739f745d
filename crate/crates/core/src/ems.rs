//! Static-passive electromagnetic skins.
//!
//! A skin is an `N × N` lattice of metal-backed cells with pitch `ℓ` centered
//! at its barycenter. Each cell reflects with `Γ = A·e^{jφ}`. The local frame
//! is (`local_x_axis`, `normal × local_x_axis`, `normal`): elevation is
//! measured from the normal and azimuth from the horizontal in-plane axis
//! towards the vertical one.
//!
//! Re-radiation uses a discretized physical-optics sum,
//!
//! ```text
//! E_sc(r) = Σ Γ_mn · E_inc(r_mn) · (ℓ²/λ) · sqrt(cosθ_in · cosθ_out) · e^{-jkd}/d
//! ```
//!
//! which reduces to the uniform-aperture result `E0·L²/(λd)` at broadside.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::Array2;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::propagation::field::{free_space_field, ComplexField, FREE_SPACE_IMPEDANCE};
use crate::scenario::{AccessPoint, EmsPanelSpec, PhaseProfile, Scenario};

/// Local spherical angles in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AnglePair {
    /// Elevation from the panel normal, `[0, 90)`.
    pub theta: f64,
    /// Azimuth, `(-180, 180]`.
    pub phi: f64,
}

impl AnglePair {
    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    /// Unit vector in the frame `(x̂, ŷ, n̂)`.
    pub fn direction(&self, x: Vec3, y: Vec3, n: Vec3) -> Vec3 {
        let (t, p) = (self.theta.to_radians(), self.phi.to_radians());
        x * (t.sin() * p.cos()) + y * (t.sin() * p.sin()) + n * t.cos()
    }
}

/// Elevation and azimuth of `target` seen from the panel barycenter.
pub fn local_angles(target: Vec3, panel: &EmsPanelSpec) -> Result<AnglePair> {
    let v = target - panel.barycenter;
    let len = v.norm();
    if len == 0.0 {
        return Err(Error::Geometry(format!(
            "target coincides with the barycenter of panel {}",
            panel.id
        )));
    }
    let n = panel.normal;
    let along = v.dot(n);
    if along <= 0.0 {
        return Err(Error::Geometry(format!(
            "target lies behind the plane of panel {}",
            panel.id
        )));
    }
    let theta = (along / len).clamp(-1.0, 1.0).acos().to_degrees();
    if theta < 1e-6 {
        return Ok(AnglePair::new(theta, 0.0));
    }
    let h = v.dot(panel.local_x_axis);
    let w = v.dot(panel.local_y_axis());
    let mut phi = w.atan2(h).to_degrees();
    if phi <= -180.0 {
        phi += 360.0;
    }
    Ok(AnglePair::new(theta, phi))
}

/// Cell centers of a panel, indexed `[m, n]` along (local x, local vertical).
pub fn cell_centers(spec: &EmsPanelSpec, pitch: f64) -> Array2<Vec3> {
    let n = spec.cells_per_side;
    let x = spec.local_x_axis;
    let y = spec.local_y_axis();
    let half = (n as f64 - 1.0) / 2.0;
    Array2::from_shape_fn((n, n), |(m, k)| {
        spec.barycenter + x * ((m as f64 - half) * pitch) + y * ((k as f64 - half) * pitch)
    })
}

/// Phase-conjugation profile that re-focuses a spherical wave from `source`
/// onto `focus`: `φ_mn = k(|r_mn − source| + |r_mn − focus|) − φ₀ mod 2π`, with
/// `φ₀` the same path sum taken at the barycenter.
pub fn synthesize_phase_profile(
    spec: &EmsPanelSpec,
    pitch: f64,
    source: Vec3,
    focus: Vec3,
    wavelength: f64,
) -> Result<Array2<f64>> {
    let n = spec.normal;
    for (what, p) in [("source", source), ("focus", focus)] {
        if (p - spec.barycenter).dot(n) <= 0.0 {
            return Err(Error::Geometry(format!(
                "{what} is not in front of panel {}",
                spec.id
            )));
        }
    }
    let k = 2.0 * PI / wavelength;
    let r0 = spec.barycenter;
    let phi0 = k * (r0.distance(source) + r0.distance(focus));
    Ok(cell_centers(spec, pitch)
        .mapv(|r| (k * (r.distance(source) + r.distance(focus)) - phi0).rem_euclid(2.0 * PI)))
}

/// A skin with resolved geometry and per-cell reflection coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct EmsPanel {
    pub spec: EmsPanelSpec,
    pub pitch: f64,
    pub phases: Array2<f64>,
    pub cell_centers: Array2<Vec3>,
    pub reflection_coeffs: Array2<Complex64>,
}

impl EmsPanel {
    /// Builds the panel, synthesizing its phase profile when requested.
    pub fn from_spec(spec: &EmsPanelSpec, scenario: &Scenario) -> Result<Self> {
        let pitch = spec
            .cell_pitch_m
            .ok_or_else(|| Error::Domain(format!("panel {} has no cell pitch", spec.id)))?;
        let phases = match &spec.phase_profile {
            PhaseProfile::Synthesized { source_ap, focus } => {
                let ap = scenario.access_point(source_ap)?;
                synthesize_phase_profile(spec, pitch, ap.position, *focus, ap.wavelength())?
            }
            PhaseProfile::Explicit(m) => m.clone(),
        };
        Self::with_phases(spec.clone(), pitch, phases)
    }

    pub fn with_phases(spec: EmsPanelSpec, pitch: f64, phases: Array2<f64>) -> Result<Self> {
        let n = spec.cells_per_side;
        if phases.dim() != (n, n) {
            return Err(Error::Domain(format!(
                "panel {}: phase matrix is {:?}, expected {n}x{n}",
                spec.id,
                phases.dim()
            )));
        }
        let a = spec.reflection_amplitude;
        let reflection_coeffs = phases.mapv(|p| Complex64::from_polar(a, p));
        let cell_centers = cell_centers(&spec, pitch);
        Ok(Self {
            spec,
            pitch,
            phases,
            cell_centers,
            reflection_coeffs,
        })
    }

    /// Same cells and phases, with the barycenter moved by `offset`.
    pub fn translated(&self, offset: Vec3) -> Self {
        let mut out = self.clone();
        out.spec.barycenter += offset;
        out.cell_centers.mapv_inplace(|c| c + offset);
        out
    }

    pub fn normal(&self) -> Vec3 {
        self.spec.normal
    }

    pub fn side_length(&self) -> f64 {
        self.pitch * self.spec.cells_per_side as f64
    }

    fn in_front(&self, p: Vec3) -> bool {
        (p - self.spec.barycenter).dot(self.normal()) > 0.0
    }
}

/// A panel lit by one access point, with the per-cell source terms cached.
#[derive(Debug, Clone)]
pub struct IlluminatedPanel {
    centers: Vec<Vec3>,
    /// `Γ·E_inc·sqrt(cosθ_in)·ℓ²/λ` per cell.
    weights: Vec<Complex64>,
    normal: Vec3,
    barycenter: Vec3,
    k: f64,
}

impl IlluminatedPanel {
    pub fn new(panel: &EmsPanel, ap: &AccessPoint) -> Self {
        let incident: Vec<ComplexField> = panel
            .cell_centers
            .iter()
            .map(|&c| {
                let d = c - ap.position;
                free_space_field(ap, d, d.norm())
            })
            .collect();
        Self::with_incident(panel, ap, &incident)
    }

    fn with_incident(panel: &EmsPanel, ap: &AccessPoint, incident: &[ComplexField]) -> Self {
        let lambda = ap.wavelength();
        let n = panel.normal();
        let scale = panel.pitch * panel.pitch / lambda;
        let weights = panel
            .cell_centers
            .iter()
            .zip(panel.reflection_coeffs.iter())
            .zip(incident)
            .map(|((&c, &g), &e)| {
                let to_src = ap.position - c;
                let cos_in = (to_src.dot(n) / to_src.norm()).max(0.0);
                g * e * (cos_in.sqrt() * scale)
            })
            .collect();
        Self {
            centers: panel.cell_centers.iter().copied().collect(),
            weights,
            normal: n,
            barycenter: panel.spec.barycenter,
            k: 2.0 * PI / lambda,
        }
    }

    pub fn in_front(&self, p: Vec3) -> bool {
        (p - self.barycenter).dot(self.normal) > 0.0
    }

    pub fn barycenter(&self) -> Vec3 {
        self.barycenter
    }

    /// Re-radiated field at `rx`; cells that do not see `rx` contribute nothing.
    pub fn scatter(&self, rx: Vec3) -> ComplexField {
        let mut acc = Complex64::new(0.0, 0.0);
        for (&c, &w) in self.centers.iter().zip(&self.weights) {
            let v = rx - c;
            let d = v.norm();
            let cos_out = v.dot(self.normal) / d;
            if cos_out <= 0.0 {
                continue;
            }
            acc += w * Complex64::from_polar(cos_out.sqrt() / d, -self.k * d);
        }
        acc
    }
}

/// Field re-radiated by `panel` at `rx` given the incident field at every cell
/// (row-major over `[m, n]`).
pub fn scattered_field(
    panel: &EmsPanel,
    ap: &AccessPoint,
    incident_field_at_cells: &[ComplexField],
    rx: Vec3,
) -> Result<ComplexField> {
    let cells = panel.cell_centers.len();
    if incident_field_at_cells.len() != cells {
        return Err(Error::Domain(format!(
            "expected {cells} incident field samples, got {}",
            incident_field_at_cells.len()
        )));
    }
    if !panel.in_front(rx) {
        return Err(Error::Geometry(format!(
            "receiver lies behind panel {}",
            panel.spec.id
        )));
    }
    Ok(IlluminatedPanel::with_incident(panel, ap, incident_field_at_cells).scatter(rx))
}

/// Incident wave used for pattern evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Illumination {
    /// Unit-amplitude plane wave arriving from the given local direction.
    PlaneWave(AnglePair),
    /// Spherical wave from a point source, normalized to unit amplitude at the
    /// barycenter.
    PointSource(Vec3),
}

#[derive(Debug, Clone, Serialize)]
pub struct DirectivityPattern {
    pub theta_deg: Vec<f64>,
    pub phi_deg: Vec<f64>,
    /// `directivity_db[i * phi_deg.len() + j]` at `(theta_deg[i], phi_deg[j])`.
    pub directivity_db: Vec<f64>,
    pub d_max: f64,
    pub peak: AnglePair,
    /// Hemisphere-integrated scattered power (W) for a 1 V/m incident field.
    pub radiated_power: f64,
    /// Incident power intercepted by the aperture (W) for the same field.
    pub intercepted_power: f64,
}

impl DirectivityPattern {
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.directivity_db[i * self.phi_deg.len() + j]
    }

    /// CSV with header `theta_deg,phi_deg,directivity_db`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "theta_deg,phi_deg,directivity_db")?;
        for (i, t) in self.theta_deg.iter().enumerate() {
            for (j, p) in self.phi_deg.iter().enumerate() {
                writeln!(w, "{t},{p},{}", self.value(i, j))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Far-field directivity on the reflection hemisphere, integrated on a
/// uniform θ×φ lattice with `sinθ` weights (trapezoidal in θ).
pub fn far_field_directivity(
    panel: &EmsPanel,
    illumination: Illumination,
    wavelength: f64,
    angular_resolution: f64,
) -> Result<DirectivityPattern> {
    if !(angular_resolution > 0.0 && angular_resolution <= 5.0) {
        return Err(Error::Domain(format!(
            "angular resolution must lie in (0, 5] degrees, got {angular_resolution}"
        )));
    }
    let spec = &panel.spec;
    let (xa, ya, na) = (spec.local_x_axis, spec.local_y_axis(), spec.normal);
    let k = 2.0 * PI / wavelength;
    let nc = spec.cells_per_side;
    let ell2 = panel.pitch * panel.pitch;

    // aperture excitation Γ·a·sqrt(cosθ_in) and intercepted power
    let mut excitation = Array2::<Complex64>::zeros((nc, nc));
    let mut intercepted = 0.0;
    for ((idx, &c), &g) in panel
        .cell_centers
        .indexed_iter()
        .zip(panel.reflection_coeffs.iter())
    {
        let (a, cos_in) = match illumination {
            Illumination::PlaneWave(inc) => {
                let u = inc.direction(xa, ya, na);
                let rel = c - spec.barycenter;
                (Complex64::from_polar(1.0, k * u.dot(rel)), u.dot(na))
            }
            Illumination::PointSource(src) => {
                let d0 = src.distance(spec.barycenter);
                let d = src.distance(c);
                (
                    Complex64::from_polar(d0 / d, -k * (d - d0)),
                    (src - c).dot(na) / d,
                )
            }
        };
        let cos_in = cos_in.max(0.0);
        excitation[idx] = g * a * cos_in.sqrt();
        intercepted += a.norm_sqr() * ell2 * cos_in / (2.0 * FREE_SPACE_IMPEDANCE);
    }

    let half = (nc as f64 - 1.0) / 2.0;
    let offsets: Vec<f64> = (0..nc).map(|m| (m as f64 - half) * panel.pitch).collect();

    let n_theta = (90.0 / angular_resolution).ceil() as usize;
    let d_theta = 90.0 / n_theta as f64;
    let n_phi = (360.0 / angular_resolution).ceil() as usize;
    let d_phi = 360.0 / n_phi as f64;
    let theta_deg: Vec<f64> = (0..=n_theta).map(|i| i as f64 * d_theta).collect();
    let phi_deg: Vec<f64> = (0..n_phi)
        .map(|j| -180.0 + (j + 1) as f64 * d_phi)
        .collect();

    // U(θ, φ) per row, in W/sr for a 1 V/m incident field
    let u_scale = (ell2 / wavelength).powi(2) / (2.0 * FREE_SPACE_IMPEDANCE);
    let rows: Vec<Vec<f64>> = theta_deg
        .par_iter()
        .map(|&t| {
            let (st, ct) = t.to_radians().sin_cos();
            let mut row = Vec::with_capacity(phi_deg.len());
            let mut px = vec![Complex64::new(0.0, 0.0); nc];
            let mut py = vec![Complex64::new(0.0, 0.0); nc];
            for &p in &phi_deg {
                let (sp, cp) = p.to_radians().sin_cos();
                let (u, v) = (st * cp, st * sp);
                for m in 0..nc {
                    px[m] = Complex64::from_polar(1.0, k * u * offsets[m]);
                    py[m] = Complex64::from_polar(1.0, k * v * offsets[m]);
                }
                let mut s = Complex64::new(0.0, 0.0);
                for m in 0..nc {
                    let mut inner = Complex64::new(0.0, 0.0);
                    for n in 0..nc {
                        inner += excitation[[m, n]] * py[n];
                    }
                    s += inner * px[m];
                }
                row.push(s.norm_sqr() * ct.max(0.0) * u_scale);
            }
            row
        })
        .collect();

    let dt = d_theta.to_radians();
    let dp = d_phi.to_radians();
    let mut radiated = 0.0;
    for (i, row) in rows.iter().enumerate() {
        let w = if i == 0 || i == n_theta { 0.5 } else { 1.0 };
        let st = theta_deg[i].to_radians().sin();
        radiated += w * st * dt * dp * row.iter().sum::<f64>();
    }
    if !(radiated > 0.0) {
        return Err(Error::Domain("panel radiates no power".into()));
    }

    let mut directivity_db = Vec::with_capacity(rows.len() * phi_deg.len());
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (i, row) in rows.iter().enumerate() {
        for (j, &u) in row.iter().enumerate() {
            let d = 4.0 * PI * u / radiated;
            let db = if d > 0.0 {
                10.0 * d.log10()
            } else {
                f64::NEG_INFINITY
            };
            if db > best.0 {
                best = (db, i, j);
            }
            directivity_db.push(db);
        }
    }
    let peak = if best.1 == 0 {
        AnglePair::new(0.0, 0.0)
    } else {
        AnglePair::new(theta_deg[best.1], phi_deg[best.2])
    };
    Ok(DirectivityPattern {
        theta_deg,
        phi_deg,
        directivity_db,
        d_max: best.0,
        peak,
        radiated_power: radiated,
        intercepted_power: intercepted,
    })
}

/// Great-circle angle between two local directions, in degrees.
pub fn angular_separation(a: AnglePair, b: AnglePair) -> f64 {
    let da = a.direction(Vec3::X, Vec3::Y, Vec3::Z);
    let db = b.direction(Vec3::X, Vec3::Y, Vec3::Z);
    da.dot(db).clamp(-1.0, 1.0).acos().to_degrees()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::AntennaPattern;

    fn wall_panel(barycenter: Vec3, n: usize, pitch: f64, profile: PhaseProfile) -> EmsPanelSpec {
        EmsPanelSpec {
            id: "S".into(),
            barycenter,
            normal: Vec3::X,
            local_x_axis: Vec3::Y,
            cells_per_side: n,
            cell_pitch_m: Some(pitch),
            reflection_amplitude: 1.0,
            phase_profile: profile,
        }
    }

    #[test]
    fn target_on_normal_axis() {
        let p = wall_panel(
            Vec3::new(0.0, 1.0, 2.0),
            4,
            0.02,
            PhaseProfile::Explicit(Array2::zeros((4, 4))),
        );
        let a = local_angles(Vec3::new(5.0, 1.0, 2.0), &p).unwrap();
        assert_eq!((a.theta, a.phi), (0.0, 0.0));
        assert!(local_angles(Vec3::new(-1.0, 1.0, 2.0), &p).is_err());
        assert!(local_angles(p.barycenter, &p).is_err());
    }

    #[test]
    fn frame_is_right_handed() {
        let p = wall_panel(
            Vec3::ZERO,
            1,
            0.02,
            PhaseProfile::Explicit(Array2::zeros((1, 1))),
        );
        let y = p.local_y_axis();
        assert_eq!(y, Vec3::Z);
        assert!((p.local_x_axis.cross(y).dot(p.normal) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn broadside_plane_wave_limit() {
        let p = wall_panel(
            Vec3::ZERO,
            8,
            0.0266,
            PhaseProfile::Explicit(Array2::zeros((8, 8))),
        );
        let far = Vec3::new(1e6, 0.0, 0.0);
        let ph = synthesize_phase_profile(&p, 0.0266, far, far, 0.0532).unwrap();
        assert!(ph.iter().all(|&v| v < 1e-3 || 2.0 * PI - v < 1e-3));
    }

    #[test]
    fn zero_amplitude_scatters_nothing() {
        let mut spec = wall_panel(
            Vec3::ZERO,
            3,
            0.0266,
            PhaseProfile::Explicit(Array2::zeros((3, 3))),
        );
        spec.reflection_amplitude = 0.0;
        let panel = EmsPanel::with_phases(spec, 0.0266, Array2::zeros((3, 3))).unwrap();
        let ap = AccessPoint {
            id: "ap".into(),
            position: Vec3::new(2.0, 0.0, 0.0),
            tx_power_dbm: 23.0,
            frequency_hz: 5.64e9,
            channel: 128,
            pattern: AntennaPattern::isotropic(),
        };
        let inc = vec![Complex64::new(1.0, 0.0); 9];
        let e = scattered_field(&panel, &ap, &inc, Vec3::new(3.0, 1.0, 0.0)).unwrap();
        assert_eq!(e.norm(), 0.0);
        assert!(scattered_field(&panel, &ap, &inc, Vec3::new(-3.0, 1.0, 0.0)).is_err());
        assert!(scattered_field(&panel, &ap, &inc[..4], Vec3::new(3.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn resolution_bounds() {
        let spec = wall_panel(
            Vec3::ZERO,
            1,
            0.0266,
            PhaseProfile::Explicit(Array2::zeros((1, 1))),
        );
        let panel = EmsPanel::with_phases(spec, 0.0266, Array2::zeros((1, 1))).unwrap();
        let inc = Illumination::PlaneWave(AnglePair::new(0.0, 0.0));
        assert!(far_field_directivity(&panel, inc, 0.0532, 0.0).is_err());
        assert!(far_field_directivity(&panel, inc, 0.0532, 6.0).is_err());
        let single = far_field_directivity(&panel, inc, 0.0532, 2.0).unwrap();
        assert!(single.d_max < 10.0, "{}", single.d_max);
    }
}
