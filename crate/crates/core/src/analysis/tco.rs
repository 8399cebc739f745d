use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One-off and recurring costs of a coverage solution ($, $/year).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TcoModel {
    pub acquisition: f64,
    pub commissioning: f64,
    pub operation_per_year: f64,
    pub decommissioning: f64,
}

impl TcoModel {
    pub fn new(
        acquisition: f64,
        commissioning: f64,
        operation_per_year: f64,
        decommissioning: f64,
    ) -> Self {
        Self {
            acquisition,
            commissioning,
            operation_per_year,
            decommissioning,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("acquisition", self.acquisition),
            ("commissioning", self.commissioning),
            ("operation_per_year", self.operation_per_year),
            ("decommissioning", self.decommissioning),
        ];
        for (name, v) in fields {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::Domain(format!(
                    "{name} cost must be non-negative, got {v}"
                )));
            }
        }
        Ok(())
    }
}

/// Total cost over `dt` years, with operation accrued per year.
pub fn tco_total(model: &TcoModel, dt: f64) -> f64 {
    model.acquisition + model.commissioning + model.operation_per_year * dt + model.decommissioning
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TcoReport {
    pub dt_years: f64,
    pub area_m2: f64,
    pub seme_total: f64,
    pub std_total: f64,
    /// `std_total − seme_total`.
    pub delta: f64,
    /// `delta / std_total`.
    pub xi: f64,
    pub saving_per_m2: f64,
}

pub fn tco_compare(seme: &TcoModel, std: &TcoModel, dt: f64, area: f64) -> Result<TcoReport> {
    if !(dt >= 0.0) {
        return Err(Error::Domain(format!(
            "time horizon must be non-negative, got {dt}"
        )));
    }
    if !(area > 0.0) {
        return Err(Error::Domain(format!("area must be positive, got {area}")));
    }
    let seme_total = tco_total(seme, dt);
    let std_total = tco_total(std, dt);
    if std_total == 0.0 {
        return Err(Error::Domain(
            "standard solution has zero total cost".into(),
        ));
    }
    let delta = std_total - seme_total;
    Ok(TcoReport {
        dt_years: dt,
        area_m2: area,
        seme_total,
        std_total,
        delta,
        xi: delta / std_total,
        saving_per_m2: delta / area,
    })
}

/// Cost file: both solutions and the served area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TcoInputs {
    pub seme: TcoModel,
    pub std: TcoModel,
    pub area_m2: f64,
}

impl TcoInputs {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let inputs: Self = serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        inputs.seme.validate()?;
        inputs.std.validate()?;
        Ok(inputs)
    }

    pub fn compare(&self, dt: f64) -> Result<TcoReport> {
        tco_compare(&self.seme, &self.std, dt, self.area_m2)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn totals() {
        let seme = TcoModel::new(100.0, 5.0, 0.0, 0.0);
        let std = TcoModel::new(700.0, 300.0, 50.0, 100.0);
        assert_eq!(tco_total(&seme, 5.0), 105.0);
        assert_eq!(tco_total(&std, 5.0), 1350.0);
        assert_eq!(tco_total(&std, 0.0), 1100.0);
    }

    #[test]
    fn compare_degenerate() {
        let m = TcoModel::new(1.0, 2.0, 3.0, 4.0);
        let r = tco_compare(&m, &m, 2.0, 1.0).unwrap();
        assert_eq!((r.delta, r.xi), (0.0, 0.0));
        let zero = TcoModel::new(0.0, 0.0, 0.0, 0.0);
        let one = TcoModel::new(1.0, 0.0, 0.0, 0.0);
        assert_eq!(tco_compare(&zero, &one, 0.0, 1.0).unwrap().xi, 1.0);
        assert!(tco_compare(&one, &zero, 0.0, 1.0).is_err());
        assert!(tco_compare(&zero, &one, 0.0, 0.0).is_err());
    }

    #[test]
    fn negative_cost_rejected() {
        assert!(TcoModel::new(-1.0, 0.0, 0.0, 0.0).validate().is_err());
    }
}
