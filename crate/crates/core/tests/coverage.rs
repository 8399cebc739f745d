mod common;

use proptest::prelude::*;
use seme_core::coverage::{
    delta_power_map, empirical_cdf, link_metrics, roi_area, roi_reduction, threshold_map,
    LinkStats, MetricStats,
};
use seme_core::propagation::{GridMeta, GridPoint, PowerGrid};
use seme_core::scenario::{read_power_grid, write_power_grid, Region};
use seme_core::Vec3;

use common::*;

fn region() -> Region {
    rect_region("A", 0.0, 0.0, 100.0, 100.0, 1.2)
}

/// `nx × 2` lattice; `None` entries are masked.
fn grid(values: &[Option<f64>]) -> PowerGrid {
    let nx = values.len().div_ceil(2);
    let values: Vec<Option<f64>> = (0..2 * nx)
        .map(|i| values.get(i).copied().flatten())
        .collect();
    let points = values
        .iter()
        .enumerate()
        .map(|(i, v)| GridPoint {
            position: Vec3::new(
                0.125 + 0.25 * (i % nx) as f64,
                0.125 + 0.25 * (i / nx) as f64,
                1.2,
            ),
            region: v.map(|_| "A".into()),
        })
        .collect();
    PowerGrid {
        spacing: 0.25,
        nx,
        ny: 2,
        points,
        values,
        meta: GridMeta {
            frequency_hz: F,
            settings_hash: 1,
        },
    }
}

fn arb_values() -> impl Strategy<Value = Vec<Option<f64>>> {
    prop::collection::vec(
        prop_oneof![1 => Just(None), 6 => (-90.0f64..-30.0).prop_map(|v| Some((v * 2.0).round() / 2.0))],
        1..80,
    )
    .prop_filter("needs a sample", |v| v.iter().any(|x| x.is_some()))
}

proptest! {
    #[test]
    fn cdf_is_a_distribution(values in arb_values(), levels in prop::collection::vec(-100.0f64..-20.0, 1..30)) {
        let mut levels = levels;
        levels.sort_by(f64::total_cmp);
        let g = grid(&values);
        let c = empirical_cdf(&g, &region(), &levels).unwrap();
        prop_assert!(c.theta.windows(2).all(|w| w[0] <= w[1]));
        prop_assert!(c.theta.iter().all(|t| (0.0..=1.0).contains(t)));
        let samples: Vec<f64> = values.iter().flatten().copied().collect();
        let max = samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(empirical_cdf(&g, &region(), &[max]).unwrap().theta[0], 1.0);
        // sort-and-count oracle
        for (p, t) in levels.iter().zip(&c.theta) {
            let count = samples.iter().filter(|&&s| s <= *p).count();
            prop_assert_eq!(*t, count as f64 / samples.len() as f64);
        }
    }

    #[test]
    fn roi_area_is_a_brute_force_count(values in arb_values(), p_th in -80.0f64..-40.0) {
        let g = grid(&values);
        let m = threshold_map(&g, p_th);
        let count = values.iter().flatten().filter(|&&v| v < p_th).count();
        prop_assert_eq!(roi_area(&m, &region(), 0.25).unwrap(), count as f64 * 0.0625);
        for (b, v) in m.below_threshold.iter().zip(&g.values) {
            prop_assert_eq!(*b, v.map(|v| v < p_th));
        }
        // Θ(P_th) and the RoI fraction differ only by samples tied at P_th
        let n = values.iter().flatten().count() as f64;
        let ties = values.iter().flatten().filter(|&&v| v == p_th).count() as f64;
        let theta = empirical_cdf(&g, &region(), &[p_th]).unwrap().theta[0];
        prop_assert!((theta - count as f64 / n - ties / n).abs() < 1e-12);
    }

    #[test]
    fn delta_stats_match_flat_recomputation(
        pairs in prop::collection::vec((-90.0f64..-30.0, -90.0f64..-30.0), 1..60)
    ) {
        let a: Vec<Option<f64>> = pairs.iter().map(|p| Some(p.0)).collect();
        let b: Vec<Option<f64>> = pairs.iter().map(|p| Some(p.1)).collect();
        let (map, st) = delta_power_map(&grid(&a), &grid(&b)).unwrap();
        let d: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
        let n = d.len() as f64;
        let mean = d.iter().sum::<f64>() / n;
        let dev = (d.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
        prop_assert!((st.avg - mean).abs() < 1e-9);
        prop_assert!((st.dev - dev).abs() < 1e-9);
        prop_assert_eq!(st.min, d.iter().cloned().fold(f64::INFINITY, f64::min));
        prop_assert_eq!(st.max, d.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        prop_assert!(st.min <= st.avg && st.avg <= st.max && st.dev >= 0.0);
        let (_, zero) = delta_power_map(&grid(&a), &grid(&a)).unwrap();
        prop_assert_eq!((zero.min, zero.max, zero.avg, zero.dev), (0.0, 0.0, 0.0, 0.0));
        prop_assert_eq!(map.values.iter().flatten().count(), pairs.len());
    }
}

#[test]
fn area_spot_values() {
    // 370 cells at 0.25 m spacing
    let values = vec![Some(-70.0); 370];
    let g = grid(&values);
    assert_eq!(
        roi_area(&threshold_map(&g, -65.0), &region(), 0.25).unwrap(),
        23.125
    );
    assert_eq!(
        ((roi_reduction(23.13, 6.94).unwrap() * 1e4).round()) / 100.0,
        70.0
    );
}

#[test]
fn full_region_area() {
    let mut s = seme_core::Scenario::free_space(vec![ap("AP", Vec3::new(-500.0, 2.0, 1.0))]);
    s.regions.push(rect_region("A", 2.5, 1.0, 29.5, 3.5, 1.2));
    let g = seme_core::simulate_grid(&s, false).unwrap();
    let m = threshold_map(&g, 0.0);
    let area = roi_area(&m, &s.regions[0], g.spacing).unwrap();
    assert!((area - 67.5).abs() <= 0.0625);
}

fn stats(avg: f64) -> MetricStats {
    MetricStats {
        min: avg,
        max: avg,
        avg,
        std: 0.0,
    }
}

#[test]
fn link_metric_values() {
    let reference = LinkStats {
        download: stats(95.79),
        download_latency: stats(122.87),
        upload: stats(100.0),
        upload_latency: stats(100.0),
    };
    let seme = LinkStats {
        download: stats(127.98),
        download_latency: stats(52.13),
        upload: stats(100.0),
        upload_latency: stats(100.0),
    };
    let r = link_metrics(&reference, &seme, 7.0).unwrap();
    // independent arithmetic
    assert!((r.xi_download - (127.98 - 95.79) / 95.79).abs() < 1e-15);
    assert!((r.xi_download * 100.0 - 33.6).abs() < 0.1);
    assert!((r.xi_download_latency * 100.0 + 57.6).abs() < 0.1);
    assert_eq!(r.xi_upload, 0.0);
    assert!((r.download_time_ref_min - 56e9 / 95.79e6 / 60.0).abs() < 1e-12);
    assert!((r.download_time_ref_min - 9.74).abs() < 0.01);
    assert!((r.download_time_seme_min - 7.29).abs() < 0.01);
    assert!((-r.xi_download_time * 100.0 - 25.2).abs() < 0.1);
}

#[test]
fn grid_csv_round_trip_through_files() {
    let g = grid(&[Some(-61.25), None, Some(-70.0 / 3.0), Some(-1e-7)]);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.csv");
    write_power_grid(&g, &path).unwrap();
    let back = read_power_grid(&path).unwrap();
    assert_eq!(back.values, g.values);
    assert_eq!((back.nx, back.ny), (g.nx, g.ny));
}
