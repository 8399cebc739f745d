//! Coverage analytics over power grids: threshold maps, RoI areas, the
//! coverage CDF, difference maps, and link-level statistics.
//!
//! Two comparison conventions coexist. Threshold maps flag a point when its
//! power is strictly below the threshold; the CDF counts samples at or below
//! a level. At exact ties the two differ by the tied samples.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::propagation::{GridPoint, PowerGrid};
use crate::scenario::Region;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BinaryCoverageMap {
    pub threshold: f64,
    pub points: Vec<GridPoint>,
    /// `None` for masked points.
    pub below_threshold: Vec<Option<bool>>,
}

impl BinaryCoverageMap {
    pub fn below_count(&self, region: &str) -> usize {
        self.points
            .iter()
            .zip(&self.below_threshold)
            .filter(|(p, b)| p.region.as_deref() == Some(region) && **b == Some(true))
            .count()
    }

    /// CSV with header `x_m,y_m,z_m,region,below`; masked points have an
    /// empty `below` field.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "x_m,y_m,z_m,region,below")?;
        for (p, b) in self.points.iter().zip(&self.below_threshold) {
            let flag = match b {
                Some(true) => "1",
                Some(false) => "0",
                None => "",
            };
            writeln!(
                w,
                "{},{},{},{},{flag}",
                p.position.x,
                p.position.y,
                p.position.z,
                p.region.as_deref().unwrap_or("")
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Flags every in-region point whose power is strictly below `p_th`.
pub fn threshold_map(grid: &PowerGrid, p_th: f64) -> BinaryCoverageMap {
    BinaryCoverageMap {
        threshold: p_th,
        points: grid.points.clone(),
        below_threshold: grid.values.iter().map(|v| v.map(|v| v < p_th)).collect(),
    }
}

/// Area of the below-threshold cells of `region` (m²).
pub fn roi_area(map: &BinaryCoverageMap, region: &Region, spacing: f64) -> Result<f64> {
    if !(spacing > 0.0) {
        return Err(Error::Domain(format!(
            "spacing must be positive, got {spacing}"
        )));
    }
    Ok(map.below_count(&region.id) as f64 * spacing * spacing)
}

/// Fractional RoI reduction `(Λ_ref − Λ_seme) / Λ_ref`.
pub fn roi_reduction(lambda_ref: f64, lambda_seme: f64) -> Result<f64> {
    if !(lambda_ref > 0.0) {
        return Err(Error::Domain(format!(
            "reference RoI area must be positive, got {lambda_ref}"
        )));
    }
    if !(lambda_seme >= 0.0) {
        return Err(Error::Domain(format!(
            "RoI area must be non-negative, got {lambda_seme}"
        )));
    }
    Ok((lambda_ref - lambda_seme) / lambda_ref)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CdfCurve {
    /// Power levels (dBm) in the order requested.
    pub p_hat: Vec<f64>,
    /// Fraction of samples at or below each level.
    pub theta: Vec<f64>,
}

impl CdfCurve {
    /// CSV with header `p_hat_dbm,theta`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "p_hat_dbm,theta")?;
        for (p, t) in self.p_hat.iter().zip(&self.theta) {
            writeln!(w, "{p},{t}")?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Evenly spaced levels from `lo` to `hi` inclusive.
pub fn level_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step).round() as usize;
    (0..=n).map(|i| lo + i as f64 * step).collect()
}

/// Default CDF levels, −75 to −40 dBm in 0.5 dB steps.
pub fn default_cdf_levels() -> Vec<f64> {
    level_grid(-75.0, -40.0, 0.5)
}

/// Empirical CDF of the region's samples on the given levels.
pub fn empirical_cdf(grid: &PowerGrid, region: &Region, p_hat_grid: &[f64]) -> Result<CdfCurve> {
    let mut samples = grid.region_values(&region.id);
    if samples.is_empty() {
        return Err(Error::EmptyRegion(region.id.clone()));
    }
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let theta = p_hat_grid
        .iter()
        .map(|&p| samples.partition_point(|&s| s <= p) as f64 / n)
        .collect();
    Ok(CdfCurve {
        p_hat: p_hat_grid.to_vec(),
        theta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaStats {
    #[serde(rename = "min_db")]
    pub min: f64,
    #[serde(rename = "max_db")]
    pub max: f64,
    #[serde(rename = "avg_db")]
    pub avg: f64,
    /// Population standard deviation.
    #[serde(rename = "dev_db")]
    pub dev: f64,
}

impl DeltaStats {
    /// Statistics of a non-empty sample list.
    pub fn from_samples(samples: &[f64]) -> Option<Self> {
        if samples.is_empty() {
            return None;
        }
        let n = samples.len() as f64;
        let avg = samples.iter().sum::<f64>() / n;
        let var = samples.iter().map(|v| (v - avg).powi(2)).sum::<f64>() / n;
        let (min, max) = samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        Some(Self {
            min,
            max,
            // rounding can put the mean a hair outside [min, max]
            avg: avg.clamp(min, max),
            dev: var.sqrt(),
        })
    }
}

/// Per-point `P_seme − P_ref` (dB) over a shared lattice.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeltaMap {
    pub points: Vec<GridPoint>,
    pub values: Vec<Option<f64>>,
}

impl DeltaMap {
    /// Statistics over every unmasked point, or only those of `region`.
    pub fn stats(&self, region: Option<&str>) -> Option<DeltaStats> {
        let samples: Vec<f64> = self
            .points
            .iter()
            .zip(&self.values)
            .filter(|(p, _)| region.is_none() || p.region.as_deref() == region)
            .filter_map(|(_, v)| *v)
            .collect();
        DeltaStats::from_samples(&samples)
    }

    /// CSV with header `x_m,y_m,z_m,region,delta_db`.
    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        writeln!(w, "x_m,y_m,z_m,region,delta_db")?;
        for (p, v) in self.points.iter().zip(&self.values) {
            writeln!(
                w,
                "{},{},{},{},{}",
                p.position.x,
                p.position.y,
                p.position.z,
                p.region.as_deref().unwrap_or(""),
                v.map(|v| v.to_string()).unwrap_or_default()
            )?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Difference map and its statistics over all in-region points.
pub fn delta_power_map(seme: &PowerGrid, reference: &PowerGrid) -> Result<(DeltaMap, DeltaStats)> {
    if !seme.same_lattice(reference) {
        return Err(Error::LatticeMismatch(format!(
            "{}x{} vs {}x{} or differing masks",
            seme.nx, seme.ny, reference.nx, reference.ny
        )));
    }
    let values: Vec<Option<f64>> = seme
        .values
        .iter()
        .zip(&reference.values)
        .map(|(a, b)| Some((*a)? - (*b)?))
        .collect();
    let map = DeltaMap {
        points: seme.points.clone(),
        values,
    };
    let stats = map
        .stats(None)
        .ok_or_else(|| Error::EmptyRegion("<all regions>".into()))?;
    Ok((map, stats))
}

/// Summary statistics of one link metric.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub min: f64,
    pub max: f64,
    pub avg: f64,
    pub std: f64,
}

/// Throughput (Mbps) and latency (ms) statistics of a speed-test campaign.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkStats {
    pub download: MetricStats,
    pub download_latency: MetricStats,
    pub upload: MetricStats,
    pub upload_latency: MetricStats,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkReport {
    /// Relative change of each average, `(seme − ref) / ref`.
    pub xi_download: f64,
    pub xi_download_latency: f64,
    pub xi_upload: f64,
    pub xi_upload_latency: f64,
    /// Download time of the payload at the average throughput (minutes).
    pub download_time_ref_min: f64,
    pub download_time_seme_min: f64,
    /// Relative change of the download time (negative when faster).
    pub xi_download_time: f64,
}

/// Relative change of each metric average and the time to download
/// `payload_gb` gigabytes (10⁹ bytes) at the average download throughput.
pub fn link_metrics(
    reference: &LinkStats,
    seme: &LinkStats,
    payload_gb: f64,
) -> Result<LinkReport> {
    let xi = |name: &str, r: &MetricStats, s: &MetricStats| -> Result<f64> {
        if !(r.avg > 0.0) {
            return Err(Error::Domain(format!(
                "reference average of {name} must be positive"
            )));
        }
        Ok((s.avg - r.avg) / r.avg)
    };
    let xi_download = xi("download", &reference.download, &seme.download)?;
    let xi_download_latency = xi(
        "download latency",
        &reference.download_latency,
        &seme.download_latency,
    )?;
    let xi_upload = xi("upload", &reference.upload, &seme.upload)?;
    let xi_upload_latency = xi(
        "upload latency",
        &reference.upload_latency,
        &seme.upload_latency,
    )?;
    if !(seme.download.avg > 0.0) {
        return Err(Error::Domain("download throughput must be positive".into()));
    }
    let bits = payload_gb * 8e9;
    let minutes = |mbps: f64| bits / (mbps * 1e6) / 60.0;
    let t_ref = minutes(reference.download.avg);
    let t_seme = minutes(seme.download.avg);
    Ok(LinkReport {
        xi_download,
        xi_download_latency,
        xi_upload,
        xi_upload_latency,
        download_time_ref_min: t_ref,
        download_time_seme_min: t_seme,
        xi_download_time: (t_seme - t_ref) / t_ref,
    })
}
