//! DC-DC charger between the array and the vehicle battery.
//!
//! Efficiency peaks when the array voltage equals the battery charging
//! voltage and falls off linearly on either side down to a floor. A measured
//! `v_in,efficiency` table can replace the parametric curve.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::array::ArrayOperatingPoint;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChargerParams {
    pub target_voltage: f64,
    pub peak_efficiency: f64,
    /// Efficiency lost per volt of |v_in - target_voltage|.
    pub droop: f64,
    pub floor_efficiency: f64,
    pub v_min: f64,
    pub v_max: f64,
    #[serde(skip)]
    pub table: Option<EfficiencyTable>,
}

impl Default for ChargerParams {
    fn default() -> Self {
        ChargerParams {
            target_voltage: 13.8,
            peak_efficiency: 0.95,
            droop: 0.02,
            floor_efficiency: 0.5,
            v_min: 5.0,
            v_max: 30.0,
            table: None,
        }
    }
}

impl ChargerParams {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let fail = |f: &str, m: String| Err(Error::config(format!("{prefix}.{f}"), m));
        for (name, v) in [
            ("target_voltage", self.target_voltage),
            ("peak_efficiency", self.peak_efficiency),
            ("droop", self.droop),
            ("floor_efficiency", self.floor_efficiency),
            ("v_min", self.v_min),
            ("v_max", self.v_max),
        ] {
            if !v.is_finite() {
                return fail(name, "must be finite".into());
            }
        }
        if !(self.peak_efficiency > 0.0 && self.peak_efficiency <= 1.0) {
            return fail(
                "peak_efficiency",
                format!("must be in (0, 1], got {}", self.peak_efficiency),
            );
        }
        if !(self.floor_efficiency >= 0.0 && self.floor_efficiency <= self.peak_efficiency) {
            return fail(
                "floor_efficiency",
                format!(
                    "must be in [0, peak_efficiency], got {}",
                    self.floor_efficiency
                ),
            );
        }
        if self.droop < 0.0 {
            return fail("droop", "must be >= 0".into());
        }
        if !(self.v_min < self.target_voltage && self.target_voltage < self.v_max) {
            return fail(
                "target_voltage",
                format!(
                    "must lie strictly inside (v_min, v_max) = ({}, {})",
                    self.v_min, self.v_max
                ),
            );
        }
        if self.v_min < 0.0 {
            return fail("v_min", "must be >= 0".into());
        }
        Ok(())
    }
}

/// Conversion efficiency at input voltage `v_in`.
pub fn efficiency(params: &ChargerParams, v_in: f64) -> f64 {
    if let Some(table) = &params.table {
        return table.lookup(v_in);
    }
    let dv = (v_in - params.target_voltage).abs();
    (params.peak_efficiency - params.droop * dv).max(params.floor_efficiency)
}

/// Highest efficiency the converter can reach at any input voltage.
pub fn max_efficiency(params: &ChargerParams) -> f64 {
    match &params.table {
        Some(table) => table.points.iter().map(|p| p.1).fold(0.0, f64::max),
        None => params.peak_efficiency,
    }
}

/// Power delivered to the battery from an array operating point. The
/// converter delivers nothing outside `[v_min, v_max]`.
pub fn battery_power(params: &ChargerParams, array_point: &ArrayOperatingPoint) -> f64 {
    battery_power_at(params, array_point.total_voltage, array_point.total_power)
}

pub(crate) fn battery_power_at(params: &ChargerParams, v_in: f64, array_power: f64) -> f64 {
    if !(params.v_min..=params.v_max).contains(&v_in) || array_power <= 0.0 {
        return 0.0;
    }
    efficiency(params, v_in) * array_power
}

/// Band of series group counts `n` for which `n * typical_module_voltage`
/// lands inside the converter's input range.
pub fn derive_n_range(
    params: &ChargerParams,
    typical_module_voltage: f64,
) -> Result<(usize, usize)> {
    if !(typical_module_voltage > 0.0 && typical_module_voltage.is_finite()) {
        return Err(Error::domain(format!(
            "typical module voltage must be > 0, got {typical_module_voltage}"
        )));
    }
    let lo = (params.v_min / typical_module_voltage).ceil().max(1.0);
    let hi = (params.v_max / typical_module_voltage).floor();
    if hi < lo {
        return Err(Error::config(
            "charger",
            format!(
                "no whole number of series groups puts a {typical_module_voltage} V module voltage \
                 inside [{}, {}] V; widen v_min/v_max",
                params.v_min, params.v_max
            ),
        ));
    }
    Ok((lo as usize, hi as usize))
}

/// Piecewise-linear efficiency lookup, clamped at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct EfficiencyTable {
    points: Vec<(f64, f64)>,
}

impl EfficiencyTable {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::domain("efficiency table is empty"));
        }
        for (i, &(v, eta)) in points.iter().enumerate() {
            if !(v.is_finite() && (0.0..=1.0).contains(&eta)) {
                return Err(Error::domain(format!(
                    "table row {i}: bad point ({v}, {eta})"
                )));
            }
            if i > 0 && v <= points[i - 1].0 {
                return Err(Error::domain(format!("table row {i}: v_in must increase")));
            }
        }
        Ok(EfficiencyTable { points })
    }

    pub fn lookup(&self, v_in: f64) -> f64 {
        let p = &self.points;
        if v_in <= p[0].0 {
            return p[0].1;
        }
        if v_in >= p[p.len() - 1].0 {
            return p[p.len() - 1].1;
        }
        let idx = p.partition_point(|q| q.0 <= v_in);
        let (x0, y0) = p[idx - 1];
        let (x1, y1) = p[idx];
        y0 + (y1 - y0) * (v_in - x0) / (x1 - x0)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Self::parse(file, &path.display().to_string())
    }

    /// Parses a `v_in,efficiency` CSV.
    pub fn parse<R: Read>(reader: R, source_name: &str) -> Result<Self> {
        let err = |row: usize, message: String| Error::Parse {
            source_name: source_name.to_string(),
            row,
            message,
        };
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let header = rdr.headers().map_err(|e| err(1, e.to_string()))?;
        if header.iter().collect::<Vec<_>>() != ["v_in", "efficiency"] {
            return Err(err(1, "expected header `v_in,efficiency`".into()));
        }
        let mut points: Vec<(f64, f64)> = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let row = i + 2;
            let rec = rec.map_err(|e| err(row, e.to_string()))?;
            let num = |j: usize| rec[j].parse::<f64>().map_err(|e| err(row, e.to_string()));
            let (v, eta) = (num(0)?, num(1)?);
            if !(0.0..=1.0).contains(&eta) {
                return Err(err(row, format!("efficiency {eta} outside [0, 1]")));
            }
            if points.last().is_some_and(|p| v <= p.0) {
                return Err(err(row, "v_in must be strictly increasing".into()));
            }
            points.push((v, eta));
        }
        Self::new(points).map_err(|e| err(1, e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn params() -> ChargerParams {
        ChargerParams {
            peak_efficiency: 0.95,
            droop: 0.02,
            floor_efficiency: 0.5,
            ..Default::default()
        }
    }

    #[test]
    fn peak_at_target() {
        let p = params();
        assert_eq!(efficiency(&p, 13.8), 0.95);
        assert_relative_eq!(
            efficiency(&p, 13.8 + 2.5),
            efficiency(&p, 13.8 - 2.5),
            max_relative = 1e-12
        );
    }

    #[test]
    fn droop_hand_value() {
        assert_relative_eq!(efficiency(&params(), 8.8), 0.85, max_relative = 1e-12);
    }

    #[test]
    fn floor_holds() {
        assert_eq!(efficiency(&params(), 100.0), 0.5);
    }

    #[test]
    fn battery_power_cases() {
        let p = params();
        let at = |v: f64, pw: f64| ArrayOperatingPoint {
            total_voltage: v,
            total_power: pw,
            ..Default::default()
        };
        assert_eq!(battery_power(&p, &at(13.8, 0.0)), 0.0);
        assert_eq!(battery_power(&p, &at(1.0, 40.0)), 0.0);
        assert_eq!(battery_power(&p, &at(31.0, 40.0)), 0.0);
        assert_relative_eq!(
            battery_power(&p, &at(8.8, 40.0)),
            34.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn n_range_examples() {
        let tight = ChargerParams {
            v_min: 13.0,
            v_max: 14.5,
            ..params()
        };
        assert_eq!(derive_n_range(&tight, 13.8).unwrap(), (1, 1));
        let band = ChargerParams {
            v_min: 10.0,
            v_max: 20.0,
            target_voltage: 13.8,
            ..params()
        };
        assert_eq!(derive_n_range(&band, 2.0).unwrap(), (5, 10));
        assert!(matches!(
            derive_n_range(&band, 25.0),
            Err(Error::Config { .. })
        ));
        assert!(derive_n_range(&band, 0.0).is_err());
    }

    #[test]
    fn validation() {
        assert!(params().validate("charger").is_ok());
        let bad = ChargerParams {
            floor_efficiency: 0.99,
            ..params()
        };
        assert!(bad.validate("charger").is_err());
        let bad = ChargerParams {
            v_max: 13.0,
            ..params()
        };
        assert!(bad.validate("charger").is_err());
        let bad = ChargerParams {
            peak_efficiency: 1.2,
            ..params()
        };
        assert!(bad.validate("charger").is_err());
    }

    #[test]
    fn table_lookup() {
        let csv = "v_in,efficiency\n5,0.6\n13.8,0.95\n30,0.7\n";
        let table = EfficiencyTable::parse(csv.as_bytes(), "mem").unwrap();
        let p = ChargerParams {
            table: Some(table),
            ..params()
        };
        assert_eq!(efficiency(&p, 13.8), 0.95);
        assert_eq!(efficiency(&p, 1.0), 0.6);
        assert_relative_eq!(efficiency(&p, 21.9), 0.825, max_relative = 1e-12);
        let bad = "v_in,efficiency\n5,0.6\n4,0.7\n";
        assert!(matches!(
            EfficiencyTable::parse(bad.as_bytes(), "mem"),
            Err(Error::Parse { row: 3, .. })
        ));
    }
}
