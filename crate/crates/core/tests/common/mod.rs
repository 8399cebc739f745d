#![allow(dead_code)]

use std::path::PathBuf;

use seme_core::scenario::{AccessPoint, AntennaPattern, Region, Scenario, Wall};
use seme_core::Vec3;

pub const F: f64 = 5.64e9;

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

pub fn hallway() -> Scenario {
    seme_core::load_scenario(data_path("hallway_a.scn")).unwrap()
}

pub fn ap(id: &str, position: Vec3) -> AccessPoint {
    AccessPoint {
        id: id.into(),
        position,
        tx_power_dbm: 23.0,
        frequency_hz: F,
        channel: 0,
        pattern: AntennaPattern::isotropic(),
    }
}

pub fn rect_region(id: &str, x0: f64, y0: f64, x1: f64, y1: f64, h: f64) -> Region {
    Region {
        id: id.into(),
        polygon: vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]],
        eval_height_m: h,
    }
}

/// Closed `w × d × h` room with one wall polyline of the given material.
pub fn box_room(w: f64, d: f64, h: f64, material: &str) -> Scenario {
    let mut s = Scenario::free_space(vec![ap("AP", Vec3::new(1.5, 1.2, 1.5))]);
    s.walls.push(Wall {
        id: "room".into(),
        footprint: vec![[0.0, 0.0], [w, 0.0], [w, d], [0.0, d], [0.0, 0.0]],
        base_height_m: 0.0,
        top_height_m: h,
        material: material.into(),
    });
    s.regions.push(rect_region("R", 0.0, 0.0, w, d, 1.2));
    s
}

pub fn straight_wall(id: &str, a: [f64; 2], b: [f64; 2], material: &str) -> Wall {
    Wall {
        id: id.into(),
        footprint: vec![a, b],
        base_height_m: 0.0,
        top_height_m: 3.0,
        material: material.into(),
    }
}
