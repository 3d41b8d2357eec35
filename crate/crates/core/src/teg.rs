//! Single thermoelectric module: a Thevenin source with EMF proportional
//! to the temperature difference across it and a fixed internal resistance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TegParams {
    /// Seebeck coefficient per couple, V/K.
    pub seebeck_per_couple: f64,
    pub n_couples: u32,
    /// Module internal resistance, ohms.
    pub internal_resistance: f64,
}

impl Default for TegParams {
    fn default() -> Self {
        // 199-couple module; EMF of about 2.4 V at 60 K.
        TegParams {
            seebeck_per_couple: 0.0002,
            n_couples: 199,
            internal_resistance: 1.5,
        }
    }
}

impl TegParams {
    pub fn new(seebeck_per_couple: f64, n_couples: u32, internal_resistance: f64) -> Result<Self> {
        let p = TegParams {
            seebeck_per_couple,
            n_couples,
            internal_resistance,
        };
        p.validate("teg")?;
        Ok(p)
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.seebeck_per_couple > 0.0 && self.seebeck_per_couple.is_finite()) {
            return Err(Error::config(
                format!("{prefix}.seebeck_per_couple"),
                format!("must be finite and > 0, got {}", self.seebeck_per_couple),
            ));
        }
        if self.n_couples == 0 {
            return Err(Error::config(format!("{prefix}.n_couples"), "must be > 0"));
        }
        if !(self.internal_resistance > 0.0 && self.internal_resistance.is_finite()) {
            return Err(Error::config(
                format!("{prefix}.internal_resistance"),
                format!("must be finite and > 0, got {}", self.internal_resistance),
            ));
        }
        Ok(())
    }

    /// Open-circuit voltage per kelvin for the whole module.
    pub fn volts_per_kelvin(&self) -> f64 {
        self.seebeck_per_couple * f64::from(self.n_couples)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ModuleOperatingPoint {
    pub voltage: f64,
    pub current: f64,
    pub power: f64,
}

impl ModuleOperatingPoint {
    fn from_vi(voltage: f64, current: f64) -> Self {
        ModuleOperatingPoint {
            voltage,
            current,
            power: voltage * current,
        }
    }
}

/// Open-circuit EMF for a temperature difference `delta_t` (K).
pub fn emf(params: &TegParams, delta_t: f64) -> Result<f64> {
    if !(delta_t >= 0.0) {
        return Err(Error::domain(format!(
            "temperature difference must be >= 0, got {delta_t}"
        )));
    }
    Ok(params.volts_per_kelvin() * delta_t)
}

/// EMF without the domain check, for internal use on already-validated fields.
pub(crate) fn emf_unchecked(params: &TegParams, delta_t: f64) -> f64 {
    params.volts_per_kelvin() * delta_t.max(0.0)
}

pub fn operating_point(
    params: &TegParams,
    delta_t: f64,
    load_resistance: f64,
) -> Result<ModuleOperatingPoint> {
    if !(load_resistance >= 0.0) {
        return Err(Error::domain(format!(
            "load resistance must be >= 0, got {load_resistance}"
        )));
    }
    let e = emf(params, delta_t)?;
    let current = e / (params.internal_resistance + load_resistance);
    Ok(ModuleOperatingPoint {
        voltage: current * load_resistance,
        current,
        power: current * current * load_resistance,
    })
}

/// Matched-load maximum power point.
pub fn module_mpp(params: &TegParams, delta_t: f64) -> Result<ModuleOperatingPoint> {
    let e = emf(params, delta_t)?;
    Ok(mpp_from_emf(e, params.internal_resistance))
}

pub(crate) fn mpp_from_emf(e: f64, r: f64) -> ModuleOperatingPoint {
    ModuleOperatingPoint {
        voltage: e / 2.0,
        current: e / (2.0 * r),
        power: e * e / (4.0 * r),
    }
}

/// `n_points` evenly spaced in voltage from short circuit (V = 0) to open
/// circuit (V = E).
pub fn iv_curve(
    params: &TegParams,
    delta_t: f64,
    n_points: usize,
) -> Result<Vec<ModuleOperatingPoint>> {
    if n_points < 2 {
        return Err(Error::domain("an I-V curve needs at least 2 points"));
    }
    let e = emf(params, delta_t)?;
    let r = params.internal_resistance;
    let last = (n_points - 1) as f64;
    Ok((0..n_points)
        .map(|k| {
            let v = if k == n_points - 1 {
                e
            } else {
                e * k as f64 / last
            };
            ModuleOperatingPoint::from_vi(v, (e - v) / r)
        })
        .collect())
}
