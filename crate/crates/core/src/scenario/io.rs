use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::propagation::{GridMeta, GridPoint, PowerGrid};

pub const POWER_GRID_HEADER: [&str; 5] = ["x_m", "y_m", "z_m", "region", "p_rx_dbm"];

/// Writes a power grid as CSV, one row per lattice point. Masked points keep
/// their row with an empty value. Values use the shortest representation
/// that parses back to the same `f64`.
pub fn write_power_grid(grid: &PowerGrid, path: impl AsRef<Path>) -> Result<()> {
    if grid.points.is_empty() {
        return Err(Error::Domain("cannot write an empty power grid".into()));
    }
    let file = BufWriter::new(File::create(path)?);
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    w.write_record(POWER_GRID_HEADER)?;
    for (p, v) in grid.points.iter().zip(&grid.values) {
        w.write_record([
            p.position.x.to_string(),
            p.position.y.to_string(),
            p.position.z.to_string(),
            p.region.clone().unwrap_or_default(),
            v.map(|v| v.to_string()).unwrap_or_default(),
        ])?;
    }
    w.into_inner()
        .map_err(|e| Error::Io(e.into_error()))?
        .flush()?;
    Ok(())
}

/// Reads a grid written by [`write_power_grid`]. Lattice dimensions and
/// spacing are recovered from the distinct coordinates; metadata is not
/// stored in the file and comes back as NaN / zero.
pub fn read_power_grid(path: impl AsRef<Path>) -> Result<PowerGrid> {
    let mut r = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != POWER_GRID_HEADER {
        return Err(Error::GridFormat(format!(
            "expected header {}, found {}",
            POWER_GRID_HEADER.join(","),
            header.join(",")
        )));
    }
    let mut points = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |k: usize| -> Result<f64> {
            rec[k].parse::<f64>().map_err(|e| {
                Error::GridFormat(format!(
                    "row {}, field {}: {e}",
                    i + 2,
                    POWER_GRID_HEADER[k]
                ))
            })
        };
        let position = Vec3::new(num(0)?, num(1)?, num(2)?);
        let region = (!rec[3].is_empty()).then(|| rec[3].to_string());
        let value = if rec[4].is_empty() {
            None
        } else {
            Some(num(4)?)
        };
        points.push(GridPoint { position, region });
        values.push(value);
    }
    let distinct = |f: fn(&GridPoint) -> f64| -> Vec<f64> {
        let set: BTreeSet<u64> = points.iter().map(|p| f(p).to_bits()).collect();
        let mut v: Vec<f64> = set.into_iter().map(f64::from_bits).collect();
        v.sort_by(f64::total_cmp);
        v
    };
    let xs = distinct(|p| p.position.x);
    let ys = distinct(|p| p.position.y);
    if xs.len() * ys.len() != points.len() {
        return Err(Error::GridFormat(format!(
            "{} rows do not form a {}x{} lattice",
            points.len(),
            xs.len(),
            ys.len()
        )));
    }
    let spacing = if xs.len() > 1 {
        xs[1] - xs[0]
    } else if ys.len() > 1 {
        ys[1] - ys[0]
    } else {
        f64::NAN
    };
    Ok(PowerGrid {
        spacing,
        nx: xs.len(),
        ny: ys.len(),
        points,
        values,
        meta: GridMeta {
            frequency_hz: f64::NAN,
            settings_hash: 0,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid_2x2() -> PowerGrid {
        let mk = |x, y, r: Option<&str>| GridPoint {
            position: Vec3::new(x, y, 1.2),
            region: r.map(str::to_string),
        };
        PowerGrid {
            spacing: 0.25,
            nx: 2,
            ny: 2,
            points: vec![
                mk(0.125, 0.125, Some("A")),
                mk(0.375, 0.125, Some("A")),
                mk(0.125, 0.375, Some("A")),
                mk(0.375, 0.375, None),
            ],
            values: vec![Some(-61.25), Some(-70.0 / 3.0), Some(-1e-7), None],
            meta: GridMeta {
                frequency_hz: 5.64e9,
                settings_hash: 1,
            },
        }
    }

    #[test]
    fn writes_header_and_masked_rows() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        write_power_grid(&grid_2x2(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.split('\n').collect();
        assert_eq!(lines[0], "x_m,y_m,z_m,region,p_rx_dbm");
        assert_eq!(lines.len(), 6, "4 rows + header + trailing newline");
        assert_eq!(lines[4], "0.375,0.375,1.2,,");
        assert!(!text.contains('\r'));
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        let g = grid_2x2();
        write_power_grid(&g, &path).unwrap();
        let back = read_power_grid(&path).unwrap();
        assert_eq!(back.nx, 2);
        assert_eq!(back.ny, 2);
        assert_eq!(back.spacing, 0.25);
        assert_eq!(back.points, g.points);
        for (a, b) in back.values.iter().zip(&g.values) {
            assert_eq!(a.map(f64::to_bits), b.map(f64::to_bits));
        }
    }

    #[test]
    fn rejects_wrong_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        std::fs::write(&path, "x,y,z,region,p\n0,0,0,,\n").unwrap();
        assert!(matches!(read_power_grid(&path), Err(Error::GridFormat(_))));
    }
}
