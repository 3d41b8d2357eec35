//! Radiator surface temperature model and drive traces.
//!
//! The coolant cools exponentially along the (unrolled, 1-D) radiator path:
//!
//! ```text
//! T(d) = (T_inlet - T_air) * exp(-(K / C_c) * d) + T_air
//! ```
//!
//! where `T_air` is the mean cold-fluid temperature, which doubles as the
//! heatsink temperature of every module. Module `i` of `N` sits at the
//! midpoint of its segment, `d_i = (i - 0.5) * L / N`.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Where the cold-side (ambient) temperature comes from.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum AmbientMode {
    /// Use each trace sample's `ambient_C` column.
    #[default]
    PerSample,
    /// Ignore the trace column and use a constant.
    Fixed { temp_c: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ThermalParams {
    /// Ratio of overall heat transfer coefficient to cold-fluid capacity
    /// rate, per metre of radiator path.
    pub k_over_cc: f64,
    /// Length of the unrolled radiator path in metres.
    pub radiator_length: f64,
    pub ambient: AmbientMode,
    /// Optional piecewise-linear `(time_s, k_over_cc)` schedule. When set it
    /// replaces `k_over_cc`, e.g. to follow a measured coolant flow rate.
    pub k_schedule: Option<Vec<(f64, f64)>>,
}

impl Default for ThermalParams {
    fn default() -> Self {
        // Spans roughly 65 K at the inlet down to 30 K at the outlet for a
        // 90 degC coolant and 25 degC air.
        ThermalParams {
            k_over_cc: 0.75,
            radiator_length: 1.0,
            ambient: AmbientMode::PerSample,
            k_schedule: None,
        }
    }
}

impl ThermalParams {
    pub fn new(k_over_cc: f64, radiator_length: f64) -> Result<Self> {
        let params = ThermalParams {
            k_over_cc,
            radiator_length,
            ..Default::default()
        };
        params.validate("thermal")?;
        Ok(params)
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        if !(self.k_over_cc > 0.0 && self.k_over_cc.is_finite()) {
            return Err(Error::config(
                format!("{prefix}.k_over_cc"),
                format!("must be finite and > 0, got {}", self.k_over_cc),
            ));
        }
        if !(self.radiator_length > 0.0 && self.radiator_length.is_finite()) {
            return Err(Error::config(
                format!("{prefix}.radiator_length"),
                format!("must be finite and > 0, got {}", self.radiator_length),
            ));
        }
        if let AmbientMode::Fixed { temp_c } = self.ambient {
            if !temp_c.is_finite() {
                return Err(Error::config(
                    format!("{prefix}.ambient.temp_c"),
                    "must be finite",
                ));
            }
        }
        if let Some(schedule) = &self.k_schedule {
            if schedule.is_empty() {
                return Err(Error::config(
                    format!("{prefix}.k_schedule"),
                    "must not be empty",
                ));
            }
            for (i, &(t, k)) in schedule.iter().enumerate() {
                if !(k > 0.0 && k.is_finite()) {
                    return Err(Error::config(
                        format!("{prefix}.k_schedule[{i}]"),
                        format!("coefficient must be finite and > 0, got {k}"),
                    ));
                }
                if i > 0 && t <= schedule[i - 1].0 {
                    return Err(Error::config(
                        format!("{prefix}.k_schedule[{i}]"),
                        "times must be strictly increasing",
                    ));
                }
            }
        }
        Ok(())
    }

    /// The effective K/C_c at `time`, honouring the optional schedule.
    pub fn k_over_cc_at(&self, time: f64) -> f64 {
        match &self.k_schedule {
            None => self.k_over_cc,
            Some(schedule) => interpolate_clamped(schedule, time),
        }
    }

    fn ambient_for(&self, sample: &TraceSample) -> f64 {
        match self.ambient {
            AmbientMode::PerSample => sample.ambient_temp,
            AmbientMode::Fixed { temp_c } => temp_c,
        }
    }
}

fn interpolate_clamped(points: &[(f64, f64)], x: f64) -> f64 {
    let first = points[0];
    let last = points[points.len() - 1];
    if x <= first.0 {
        return first.1;
    }
    if x >= last.0 {
        return last.1;
    }
    let idx = points.partition_point(|p| p.0 <= x);
    let (x0, y0) = points[idx - 1];
    let (x1, y1) = points[idx];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// Hot-side temperature at distance `d` (m) from the radiator entrance.
pub fn temperature_at(params: &ThermalParams, inlet: f64, ambient: f64, d: f64) -> Result<f64> {
    profile(params.k_over_cc, inlet, ambient, d)
}

fn profile(k_over_cc: f64, inlet: f64, ambient: f64, d: f64) -> Result<f64> {
    if !(d >= 0.0) {
        return Err(Error::domain(format!("distance must be >= 0, got {d}")));
    }
    if !(inlet >= ambient) {
        return Err(Error::domain(format!(
            "coolant inlet {inlet} degC is below ambient {ambient} degC"
        )));
    }
    Ok((inlet - ambient) * (-k_over_cc * d).exp() + ambient)
}

/// One row of a drive trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub time: f64,
    pub coolant_inlet_temp: f64,
    pub ambient_temp: f64,
}

/// Per-module hot-side temperatures at one instant, ordered by distance
/// from the radiator entrance.
#[derive(Debug, Clone, PartialEq)]
pub struct TemperatureField {
    pub time: f64,
    pub hot_side_temps: Vec<f64>,
    pub ambient_temp: f64,
}

impl TemperatureField {
    pub fn new(time: f64, hot_side_temps: Vec<f64>, ambient_temp: f64) -> Result<Self> {
        if hot_side_temps.is_empty() {
            return Err(Error::domain(
                "temperature field must have at least one module",
            ));
        }
        if let Some(t) = hot_side_temps
            .iter()
            .find(|t| !t.is_finite() || **t < ambient_temp)
        {
            return Err(Error::domain(format!(
                "hot-side temperature {t} is not finite or below ambient {ambient_temp}"
            )));
        }
        Ok(TemperatureField {
            time,
            hot_side_temps,
            ambient_temp,
        })
    }

    /// A field where every module sees the same hot-side temperature.
    pub fn uniform(time: f64, n_modules: usize, hot: f64, ambient_temp: f64) -> Result<Self> {
        Self::new(time, vec![hot; n_modules], ambient_temp)
    }

    pub fn len(&self) -> usize {
        self.hot_side_temps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hot_side_temps.is_empty()
    }

    /// Temperature difference across each module (K).
    pub fn delta_ts(&self) -> impl Iterator<Item = f64> + '_ {
        self.hot_side_temps
            .iter()
            .map(move |t| t - self.ambient_temp)
    }

    pub fn is_non_increasing(&self) -> bool {
        self.hot_side_temps.windows(2).all(|w| w[1] <= w[0])
    }
}

pub fn field_from_sample(
    params: &ThermalParams,
    sample: &TraceSample,
    n_modules: usize,
) -> Result<TemperatureField> {
    if n_modules == 0 {
        return Err(Error::domain("array must contain at least one module"));
    }
    let ambient = params.ambient_for(sample);
    let k = params.k_over_cc_at(sample.time);
    let pitch = params.radiator_length / n_modules as f64;
    let temps = (0..n_modules)
        .map(|i| {
            profile(
                k,
                sample.coolant_inlet_temp,
                ambient,
                (i as f64 + 0.5) * pitch,
            )
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TemperatureField {
        time: sample.time,
        hot_side_temps: temps,
        ambient_temp: ambient,
    })
}

/// A validated drive trace: strictly increasing, non-negative timestamps and
/// coolant never colder than the air.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    samples: Vec<TraceSample>,
}

pub const TRACE_HEADER: [&str; 3] = ["time_s", "coolant_inlet_C", "ambient_C"];

impl Trace {
    pub fn new(samples: Vec<TraceSample>) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::domain("trace must contain at least one sample"));
        }
        for (i, s) in samples.iter().enumerate() {
            check_sample(s, i.checked_sub(1).map(|p| samples[p].time))
                .map_err(|message| Error::Domain(format!("sample {i}: {message}")))?;
        }
        Ok(Trace { samples })
    }

    pub fn samples(&self) -> &[TraceSample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn start_time(&self) -> f64 {
        self.samples[0].time
    }

    pub fn end_time(&self) -> f64 {
        self.samples[self.samples.len() - 1].time
    }

    /// Linearly interpolated sample at `time`, clamped to the trace ends.
    pub fn at(&self, time: f64) -> TraceSample {
        let s = &self.samples;
        if time <= s[0].time {
            return TraceSample { time, ..s[0] };
        }
        let last = s[s.len() - 1];
        if time >= last.time {
            return TraceSample { time, ..last };
        }
        let idx = s.partition_point(|p| p.time <= time);
        let (a, b) = (s[idx - 1], s[idx]);
        if a.time == time {
            return a;
        }
        let w = (time - a.time) / (b.time - a.time);
        TraceSample {
            time,
            coolant_inlet_temp: a.coolant_inlet_temp
                + w * (b.coolant_inlet_temp - a.coolant_inlet_temp),
            ambient_temp: a.ambient_temp + w * (b.ambient_temp - a.ambient_temp),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(TRACE_HEADER)?;
        for s in &self.samples {
            w.write_record([
                s.time.to_string(),
                s.coolant_inlet_temp.to_string(),
                s.ambient_temp.to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn check_sample(s: &TraceSample, prev_time: Option<f64>) -> std::result::Result<(), String> {
    if !(s.time.is_finite() && s.time >= 0.0) {
        return Err(format!("time must be finite and >= 0, got {}", s.time));
    }
    if let Some(prev) = prev_time {
        if s.time <= prev {
            return Err(format!("time {} does not increase past {prev}", s.time));
        }
    }
    if !(s.coolant_inlet_temp.is_finite() && s.ambient_temp.is_finite()) {
        return Err("temperatures must be finite".into());
    }
    if s.coolant_inlet_temp < s.ambient_temp {
        return Err(format!(
            "coolant inlet {} degC is below ambient {} degC",
            s.coolant_inlet_temp, s.ambient_temp
        ));
    }
    Ok(())
}

pub fn load_trace(path: impl AsRef<Path>) -> Result<Trace> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_trace(file, &path.display().to_string())
}

/// Parses a `time_s,coolant_inlet_C,ambient_C` CSV. `source_name` labels
/// errors.
pub fn parse_trace<R: Read>(reader: R, source_name: &str) -> Result<Trace> {
    let parse_err = |row: usize, message: String| Error::Parse {
        source_name: source_name.to_string(),
        row,
        message,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers().map_err(|e| parse_err(1, e.to_string()))?;
    if header.iter().collect::<Vec<_>>() != TRACE_HEADER {
        return Err(parse_err(
            1,
            format!("expected header `{}`", TRACE_HEADER.join(",")),
        ));
    }
    let mut samples = Vec::new();
    for (i, record) in rdr.records().enumerate() {
        let row = i + 2;
        let record = record.map_err(|e| parse_err(row, e.to_string()))?;
        if record.len() != 3 {
            return Err(parse_err(
                row,
                format!("expected 3 fields, found {}", record.len()),
            ));
        }
        let field = |j: usize| -> Result<f64> {
            record[j]
                .parse::<f64>()
                .map_err(|e| parse_err(row, format!("{}: {e}", TRACE_HEADER[j])))
        };
        let sample = TraceSample {
            time: field(0)?,
            coolant_inlet_temp: field(1)?,
            ambient_temp: field(2)?,
        };
        check_sample(&sample, samples.last().map(|s: &TraceSample| s.time))
            .map_err(|m| parse_err(row, m))?;
        samples.push(sample);
    }
    if samples.is_empty() {
        return Err(parse_err(1, "trace has no data rows".into()));
    }
    Ok(Trace { samples })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SynthKind {
    Constant,
    Ramp,
    Sinusoid,
    RandomWalk,
}

/// Parameters for a synthetic one-sample-per-second drive trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpec {
    pub kind: SynthKind,
    pub duration_s: usize,
    /// Starting (or mean) coolant inlet temperature.
    pub inlet_c: f64,
    pub ambient_c: f64,
    /// Ramp slope in degC/s.
    pub slope_c_per_s: f64,
    pub amplitude_c: f64,
    pub period_s: f64,
    /// Random-walk mean step in degC/s.
    pub drift_c_per_s: f64,
    /// Random-walk step standard deviation in degC.
    pub step_sigma_c: f64,
    /// The inlet temperature is kept inside `[min_inlet_c, max_inlet_c]`.
    pub min_inlet_c: f64,
    pub max_inlet_c: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            kind: SynthKind::RandomWalk,
            duration_s: 800,
            inlet_c: 85.0,
            ambient_c: 25.0,
            slope_c_per_s: 0.01,
            amplitude_c: 5.0,
            period_s: 300.0,
            drift_c_per_s: 0.0,
            step_sigma_c: 0.15,
            min_inlet_c: 60.0,
            max_inlet_c: 100.0,
            seed: 7,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self, prefix: &str) -> Result<()> {
        let fail = |f: &str, m: String| Err(Error::config(format!("{prefix}.{f}"), m));
        if self.duration_s < 1 {
            return fail("duration_s", "must be >= 1".into());
        }
        for (name, v) in [
            ("inlet_c", self.inlet_c),
            ("ambient_c", self.ambient_c),
            ("slope_c_per_s", self.slope_c_per_s),
            ("amplitude_c", self.amplitude_c),
            ("drift_c_per_s", self.drift_c_per_s),
            ("step_sigma_c", self.step_sigma_c),
            ("min_inlet_c", self.min_inlet_c),
            ("max_inlet_c", self.max_inlet_c),
        ] {
            if !v.is_finite() {
                return fail(name, "must be finite".into());
            }
        }
        if self.step_sigma_c < 0.0 {
            return fail("step_sigma_c", "must be >= 0".into());
        }
        if self.kind == SynthKind::Sinusoid && !(self.period_s > 0.0) {
            return fail("period_s", "must be > 0".into());
        }
        if self.min_inlet_c < self.ambient_c {
            return fail("min_inlet_c", "must not be below ambient_c".into());
        }
        if self.max_inlet_c < self.min_inlet_c {
            return fail("max_inlet_c", "must be >= min_inlet_c".into());
        }
        Ok(())
    }
}

/// Generates a deterministic trace with one sample per second from t = 0 to
/// t = `duration_s` inclusive.
pub fn synth_trace(spec: &SynthSpec) -> Result<Trace> {
    spec.validate("synth")?;
    let (lo, hi) = (spec.min_inlet_c, spec.max_inlet_c);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.step_sigma_c).map_err(|e| Error::domain(e.to_string()))?;
    let mut walk = spec.inlet_c.clamp(lo, hi);
    let samples = (0..=spec.duration_s)
        .map(|k| {
            let t = k as f64;
            let inlet = match spec.kind {
                SynthKind::Constant => spec.inlet_c,
                SynthKind::Ramp => spec.inlet_c + spec.slope_c_per_s * t,
                SynthKind::Sinusoid => {
                    spec.inlet_c
                        + spec.amplitude_c * (2.0 * std::f64::consts::PI * t / spec.period_s).sin()
                }
                SynthKind::RandomWalk => {
                    if k > 0 {
                        walk = reflect(walk + spec.drift_c_per_s + noise.sample(&mut rng), lo, hi);
                    }
                    walk
                }
            };
            TraceSample {
                time: t,
                coolant_inlet_temp: inlet.clamp(lo, hi),
                ambient_temp: spec.ambient_c,
            }
        })
        .collect();
    Trace::new(samples)
}

fn reflect(x: f64, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return lo;
    }
    let mut x = x;
    // a couple of bounces is plenty for realistic step sizes
    for _ in 0..4 {
        if x < lo {
            x = 2.0 * lo - x;
        } else if x > hi {
            x = 2.0 * hi - x;
        } else {
            break;
        }
    }
    x.clamp(lo, hi)
}
