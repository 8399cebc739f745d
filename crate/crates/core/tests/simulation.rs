mod common;

use seme_core::coverage::threshold_map;
use seme_core::scenario::{write_power_grid, SummationMode};
use seme_core::{simulate_grid, GridEvaluator, Vec3};

use common::*;

fn csv_bytes_with_threads(threads: usize, panels: bool) -> Vec<u8> {
    let s = hallway();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap();
    let g = pool.install(|| simulate_grid(&s, panels)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.csv");
    write_power_grid(&g, &path).unwrap();
    std::fs::read(path).unwrap()
}

#[test]
fn grid_is_identical_for_any_thread_count() {
    for panels in [false, true] {
        let one = csv_bytes_with_threads(1, panels);
        for n in [2, 3, 8] {
            assert!(
                one == csv_bytes_with_threads(n, panels),
                "{n} threads, panels {panels}"
            );
        }
    }
}

#[test]
fn panel_never_lowers_incoherent_power() {
    let s = hallway();
    assert_eq!(s.rt.summation_mode, SummationMode::Incoherent);
    let eval = GridEvaluator::new(&s).unwrap();
    let reference = eval.reference();
    let seme = simulate_grid(&s, true).unwrap();
    let mut raised = 0;
    for (a, b) in seme.values.iter().zip(&reference.values) {
        match (a, b) {
            (Some(a), Some(b)) => {
                assert!(a >= b);
                raised += usize::from(a > b);
            }
            (None, None) => {}
            _ => panic!("mask changed"),
        }
    }
    assert!(raised > 0);
}

#[test]
fn multibounce_adds_power_incoherently() {
    let mut s = hallway();
    let base = simulate_grid(&s, true).unwrap();
    s.rt.include_ems_multibounce = true;
    let more = simulate_grid(&s, true).unwrap();
    let mut raised = 0;
    for (a, b) in more.values.iter().zip(&base.values) {
        let (a, b) = (a.unwrap(), b.unwrap());
        assert!(a >= b);
        raised += usize::from(a > b);
    }
    assert!(raised > 0);
}

#[test]
fn hallway_reference_hole_is_far_from_the_ap() {
    let s = hallway();
    let g = simulate_grid(&s, false).unwrap();
    let m = threshold_map(&g, s.rt.threshold_dbm);
    let below: Vec<f64> = m
        .points
        .iter()
        .zip(&m.below_threshold)
        .filter(|(_, b)| **b == Some(true))
        .map(|(p, _)| p.position.x)
        .collect();
    assert!(!below.is_empty());
    let mid = (2.5 + 29.5) / 2.0;
    let far = below.iter().filter(|&&x| x > mid).count() as f64;
    assert!(far / below.len() as f64 >= 0.9);
    assert!(below.iter().sum::<f64>() / below.len() as f64 > mid);
    assert_eq!(g.region_values("A").len(), 1080);
}

#[test]
fn coherent_two_ray_stays_within_three_db() {
    let mut s = seme_core::Scenario::free_space(vec![ap("AP", Vec3::new(1.0, 1.0, 1.5))]);
    s.walls
        .push(straight_wall("w", [-20.0, 0.0], [20.0, 0.0], "concrete"));
    s.regions.push(rect_region("R", -5.0, 0.5, 5.0, 4.0, 1.2));
    s.rt.max_reflections = 1;
    let inc = simulate_grid(&s, false).unwrap();
    s.rt.summation_mode = SummationMode::Coherent;
    let coh = simulate_grid(&s, false).unwrap();
    // |e1 + e2|² ≤ 2(|e1|² + |e2|²)
    let mut faded = 0;
    for (c, i) in coh.values.iter().zip(&inc.values) {
        let (c, i) = (c.unwrap(), i.unwrap());
        assert!(c <= i + 10.0 * 2f64.log10() + 1e-9);
        faded += usize::from(c < i);
    }
    assert!(faded > 0);
}

#[test]
fn point_on_top_of_ap_is_skipped() {
    let mut s = seme_core::Scenario::free_space(vec![ap("AP", Vec3::new(0.125, 0.125, 1.2))]);
    s.regions.push(rect_region("R", 0.0, 0.0, 1.0, 1.0, 1.2));
    let g = simulate_grid(&s, false).unwrap();
    assert!(g.values.iter().all(|v| v.unwrap().is_finite()));
}
