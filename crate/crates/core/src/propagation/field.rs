//! Per-path complex field and the field-to-power conversion.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::tracer::{InteractionKind, RayPath};
use crate::geometry::{Vec3, WallFace};
use crate::scenario::{AccessPoint, Material, ReflectionMode, SummationMode};

/// Scalar field phasor (V/m).
pub type ComplexField = Complex64;

/// Free-space wave impedance, sqrt(μ0/ε0) (Ω).
pub const FREE_SPACE_IMPEDANCE: f64 = 376.730_313_668;

/// Reported power for a point that no path reaches.
pub const POWER_FLOOR_DBM: f64 = -300.0;

/// Perpendicular-polarization Fresnel coefficient of a lossless dielectric
/// half-space. Real and negative for `ε_r > 1`.
pub fn fresnel_perpendicular(incidence_cosine: f64, relative_permittivity: f64) -> f64 {
    let c = incidence_cosine.clamp(0.0, 1.0);
    let root = (relative_permittivity - (1.0 - c * c)).max(0.0).sqrt();
    (c - root) / (c + root)
}

/// Signed real reflection coefficient of a material. Fixed-magnitude
/// materials reflect with a sign flip, like a conductor.
pub fn reflection_coefficient(material: &Material, incidence_cosine: f64) -> f64 {
    match material.reflection_mode {
        ReflectionMode::Fresnel => {
            fresnel_perpendicular(incidence_cosine, material.relative_permittivity)
        }
        ReflectionMode::Fixed => -material.fixed_reflection_magnitude,
    }
}

/// Field amplitude factor for one wall traversal.
pub fn transmission_coefficient(material: &Material) -> f64 {
    10f64.powf(-material.transmission_loss_db / 20.0)
}

/// Free-space field of `ap` at distance `d` along `direction`:
/// `sqrt(η·P·G/(2π))/d · e^{-jkd}`.
pub fn free_space_field(ap: &AccessPoint, direction: Vec3, d: f64) -> ComplexField {
    let k = 2.0 * PI / ap.wavelength();
    let amp = (FREE_SPACE_IMPEDANCE * ap.tx_power_watts() * ap.pattern.gain(direction)
        / (2.0 * PI))
        .sqrt()
        / d;
    Complex64::from_polar(amp, -k * d)
}

/// Field carried by one path, including every interaction coefficient.
pub fn path_field(path: &RayPath, ap: &AccessPoint, faces: &[WallFace]) -> ComplexField {
    let coeff: f64 = path
        .interactions
        .iter()
        .map(|i| {
            let m = &faces[i.face].material;
            match i.kind {
                InteractionKind::Reflection => reflection_coefficient(m, i.incidence_cosine),
                InteractionKind::Transmission => transmission_coefficient(m),
            }
        })
        .product();
    free_space_field(ap, path.departure_direction, path.total_length) * coeff
}

/// `λ²·G_RX/(8πη)`: converts |E|² (V²/m²) to received watts.
pub fn aperture_factor(g_rx: f64, wavelength: f64) -> f64 {
    wavelength * wavelength * g_rx / (8.0 * PI * FREE_SPACE_IMPEDANCE)
}

pub fn watts_to_dbm(p: f64) -> f64 {
    if p > 0.0 {
        10.0 * p.log10() + 30.0
    } else {
        POWER_FLOOR_DBM
    }
}

/// Received power in watts from per-path fields.
pub fn received_power_watts(
    fields: &[ComplexField],
    g_rx: f64,
    wavelength: f64,
    mode: SummationMode,
) -> f64 {
    let s = match mode {
        SummationMode::Coherent => fields.iter().sum::<Complex64>().norm_sqr(),
        SummationMode::Incoherent => fields.iter().map(|e| e.norm_sqr()).sum(),
    };
    aperture_factor(g_rx, wavelength) * s
}

/// Received power in dBm from per-path fields.
pub fn received_power(
    fields: &[ComplexField],
    g_rx: f64,
    wavelength: f64,
    mode: SummationMode,
) -> f64 {
    watts_to_dbm(received_power_watts(fields, g_rx, wavelength, mode))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fresnel_limits() {
        assert_eq!(fresnel_perpendicular(1.0, 1.0), 0.0);
        // normal incidence: (1 - sqrt(εr)) / (1 + sqrt(εr))
        assert!((fresnel_perpendicular(1.0, 4.0) + 1.0 / 3.0).abs() < 1e-15);
        // grazing incidence tends to -1
        assert!((fresnel_perpendicular(0.0, 4.0) + 1.0).abs() < 1e-15);
    }

    #[test]
    fn fixed_mode_flips_sign() {
        let mut m = Material::fresnel("metal", 1.0, 0.0);
        m.reflection_mode = ReflectionMode::Fixed;
        m.fixed_reflection_magnitude = 0.7;
        assert_eq!(reflection_coefficient(&m, 0.3), -0.7);
    }

    #[test]
    fn twelve_db_wall_scales_field() {
        let m = Material::fresnel("concrete", 5.3, 12.0);
        assert!((transmission_coefficient(&m) - 0.251_188_643_150_958).abs() < 1e-12);
    }

    #[test]
    fn summation_modes() {
        let e = Complex64::new(0.3, -0.4);
        let one = received_power(&[e], 1.0, 0.05, SummationMode::Incoherent);
        let inc = received_power(&[e, e], 1.0, 0.05, SummationMode::Incoherent);
        let coh = received_power(&[e, e], 1.0, 0.05, SummationMode::Coherent);
        assert!((inc - one - 10.0 * 2f64.log10()).abs() < 1e-12);
        assert!((coh - one - 20.0 * 2f64.log10()).abs() < 1e-12);
        let cancel = received_power(&[e, -e], 1.0, 0.05, SummationMode::Coherent);
        assert_eq!(cancel, POWER_FLOOR_DBM);
    }
}
