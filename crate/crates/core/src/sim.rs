//! Discrete-time simulation of a radiator-mounted array under a control
//! scheme, with energy and switching-overhead accounting.
//!
//! Each step samples the drive trace, computes the temperature field, lets
//! the scheme's controller run at its cadence, and integrates the battery
//! power of the held configuration at its MPP. A switch event costs
//!
//! ```text
//! (sensing + compute + reconfig + MPPT settle delay) * P_prev + per_switch_energy * flips
//! ```
//!
//! where `P_prev` is the battery power of the previous step.

use std::fmt::Write as _;
use std::io::Write;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::array::{self, Configuration};
use crate::charger::{self, ChargerParams};
use crate::error::{Error, Result};
use crate::predictor::{Forecaster, MlrPredictor, PredictorConfig};
use crate::reconfig::{self, DnorInputs, OverheadModel, Plant, ReconfigParams};
use crate::teg::{self, TegParams};
use crate::thermal::{self, TemperatureField, ThermalParams, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OverheadParams {
    pub sensing_delay: f64,
    pub compute_delay: f64,
    pub reconfig_delay: f64,
    pub mppt_settle_delay: f64,
    /// Actuation energy per toggled switch, J.
    pub per_switch_energy: f64,
    /// Replace `compute_delay` with the measured controller runtime. Makes
    /// energy figures depend on the host machine.
    pub measure_compute: bool,
}

impl Default for OverheadParams {
    fn default() -> Self {
        OverheadParams {
            sensing_delay: 0.005,
            compute_delay: 0.002,
            reconfig_delay: 0.010,
            mppt_settle_delay: 0.010,
            per_switch_energy: 0.001,
            measure_compute: false,
        }
    }
}

impl OverheadParams {
    pub fn zero() -> Self {
        OverheadParams {
            sensing_delay: 0.0,
            compute_delay: 0.0,
            reconfig_delay: 0.0,
            mppt_settle_delay: 0.0,
            per_switch_energy: 0.0,
            measure_compute: false,
        }
    }

    pub fn validate(&self, prefix: &str) -> Result<()> {
        for (name, v) in [
            ("sensing_delay", self.sensing_delay),
            ("compute_delay", self.compute_delay),
            ("reconfig_delay", self.reconfig_delay),
            ("mppt_settle_delay", self.mppt_settle_delay),
            ("per_switch_energy", self.per_switch_energy),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::config(
                    format!("{prefix}.{name}"),
                    format!("must be finite and >= 0, got {v}"),
                ));
            }
        }
        Ok(())
    }

    pub fn total_delay(&self) -> f64 {
        self.sensing_delay + self.compute_delay + self.reconfig_delay + self.mppt_settle_delay
    }
}

impl OverheadModel for OverheadParams {
    fn switch_energy(&self, flips: usize, reference_power: f64) -> f64 {
        self.total_delay() * reference_power.max(0.0) + self.per_switch_energy * flips as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SchemeSpec {
    /// Prediction-gated switching, invoked every `horizon + 1` steps.
    Dnor { horizon: usize },
    /// INOR every `period_s`, adopting every changed result.
    InorPeriodic {
        period_s: f64,
        charge: PeriodicCharge,
    },
    /// A static configuration that never changes.
    Fixed { config: Configuration },
}

impl SchemeSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeSpec::Dnor { .. } => "dnor",
            SchemeSpec::InorPeriodic { .. } => "inor",
            SchemeSpec::Fixed { .. } => "fixed",
        }
    }

    /// The 10x10 baseline generalised to any size: ten series
    /// groups of (nearly) equal size.
    pub fn baseline(n_modules: usize) -> Result<Self> {
        Ok(SchemeSpec::Fixed {
            config: Configuration::uniform(n_modules, 10.min(n_modules))?,
        })
    }
}

/// Which periodic INOR cycles pay the reconfiguration delays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PeriodicCharge {
    /// Every period is a full sense/compute/actuate/settle cycle. Switch
    /// energy is still only paid for toggled switches.
    #[default]
    EveryPeriod,
    /// Only periods whose result differs from the held configuration pay.
    OnChange,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum MpptMode {
    /// Exact closed-form MPP.
    #[default]
    Analytic,
    /// Perturb-and-observe hill climbing on the array current.
    PerturbObserve { step: f64, max_iters: usize },
}

/// Everything shared by the schemes of one comparison.
#[derive(Debug, Clone)]
pub struct SimSetup {
    pub n_modules: usize,
    pub thermal: ThermalParams,
    pub teg: TegParams,
    pub charger: ChargerParams,
    pub overhead: OverheadParams,
    pub reconfig: ReconfigParams,
    pub predictor: PredictorConfig,
    pub mppt: MpptMode,
    pub step_s: f64,
}

impl SimSetup {
    /// Defaults for `n_modules`, with the group-count band derived from the
    /// charger window at the given coolant/air temperatures.
    pub fn with_defaults(n_modules: usize, inlet_c: f64, ambient_c: f64) -> Result<Self> {
        let thermal = ThermalParams::default();
        let teg = TegParams::default();
        let charger = ChargerParams::default();
        let sample = thermal::TraceSample {
            time: 0.0,
            coolant_inlet_temp: inlet_c,
            ambient_temp: ambient_c,
        };
        let field = thermal::field_from_sample(&thermal, &sample, n_modules)?;
        let (n_min, n_max) = auto_n_range(&field, &teg, &charger)?;
        Ok(SimSetup {
            n_modules,
            thermal,
            teg,
            charger,
            overhead: OverheadParams::default(),
            reconfig: ReconfigParams::new(n_min, n_max.min(n_modules).max(n_min))?,
            predictor: PredictorConfig::default(),
            mppt: MpptMode::Analytic,
            step_s: 1.0,
        })
    }

    pub fn plant(&self) -> Plant<'_> {
        Plant::new(&self.teg, &self.charger, self.reconfig.objective)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_modules == 0 {
            return Err(Error::config("n_modules", "must be >= 1"));
        }
        self.thermal.validate("thermal")?;
        self.teg.validate("teg")?;
        self.charger.validate("charger")?;
        self.overhead.validate("overhead")?;
        self.predictor.validate("predictor")?;
        if self.reconfig.n_max > self.n_modules {
            return Err(Error::config(
                "reconfig.n_max",
                format!(
                    "{} exceeds the array size {}",
                    self.reconfig.n_max, self.n_modules
                ),
            ));
        }
        if !(self.step_s > 0.0 && self.step_s.is_finite()) {
            return Err(Error::config("step_s", "must be finite and > 0"));
        }
        if let MpptMode::PerturbObserve { step, max_iters } = self.mppt {
            if !(step > 0.0 && step.is_finite()) || max_iters == 0 {
                return Err(Error::config("mppt", "step must be > 0 and max_iters >= 1"));
            }
        }
        Ok(())
    }
}

/// Group-count band from the charger input window and the field's mean
/// module MPP voltage.
pub fn auto_n_range(
    field: &TemperatureField,
    teg: &TegParams,
    charger: &ChargerParams,
) -> Result<(usize, usize)> {
    let mean_dt = field.delta_ts().sum::<f64>() / field.len() as f64;
    let v_typ = teg::mpp_from_emf(teg::emf(teg, mean_dt)?, teg.internal_resistance).voltage;
    let (lo, hi) = charger::derive_n_range(charger, v_typ)?;
    if lo > field.len() {
        return Err(Error::config(
            "reconfig",
            format!(
                "{} modules are too few to reach the charger's minimum voltage",
                field.len()
            ),
        ));
    }
    Ok((lo, hi.min(field.len())))
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub time: f64,
    pub array_power: f64,
    pub battery_power: f64,
    pub voltage: f64,
    pub current: f64,
    pub boundaries: String,
    pub switched: bool,
    /// Overhead energy charged at this step.
    pub overhead: f64,
    pub ideal_power: f64,
    pub ratio_ideal: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecisionRecord {
    pub time: f64,
    pub old: Option<String>,
    pub candidate: String,
    pub e_old: f64,
    pub e_new: f64,
    pub e_overhead: f64,
    pub switched: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub scheme: String,
    pub records: Vec<StepRecord>,
    /// DNOR only.
    pub decisions: Vec<DecisionRecord>,
    /// Sum of battery power times step length.
    pub gross_energy: f64,
    pub switch_overhead: f64,
    pub switch_count: usize,
    /// Controller invocations (zero for a fixed scheme).
    pub invocations: usize,
    pub step_s: f64,
    /// Wall-clock controller time, the only non-deterministic field.
    pub runtime_total_s: f64,
}

impl SimulationReport {
    /// Gross energy net of switching overhead.
    pub fn energy_output(&self) -> f64 {
        self.gross_energy - self.switch_overhead
    }

    pub fn average_runtime_ms(&self) -> f64 {
        if self.invocations == 0 {
            0.0
        } else {
            1e3 * self.runtime_total_s / self.invocations as f64
        }
    }

    pub fn ideal_energy(&self) -> f64 {
        self.records.iter().map(|r| r.ideal_power).sum::<f64>() * self.step_s
    }
}

fn ideal_power(field: &TemperatureField, teg: &TegParams, charger: &ChargerParams) -> f64 {
    let r = teg.internal_resistance;
    let sum: f64 = field
        .delta_ts()
        .map(|dt| teg::mpp_from_emf(teg::emf_unchecked(teg, dt), r).power)
        .sum();
    sum * charger::max_efficiency(charger)
}

fn cadence(period_s: f64, step_s: f64) -> usize {
    ((period_s / step_s).round() as usize).max(1)
}

/// Runs one scheme over a trace.
pub fn run(trace: &Trace, setup: &SimSetup, scheme: &SchemeSpec) -> Result<SimulationReport> {
    run_inner(trace, setup, scheme, None)
}

/// Runs DNOR with a caller-supplied forecaster instead of the configured
/// regression model.
pub fn run_dnor_with(
    trace: &Trace,
    setup: &SimSetup,
    horizon: usize,
    forecaster: Box<dyn Forecaster>,
) -> Result<SimulationReport> {
    run_inner(
        trace,
        setup,
        &SchemeSpec::Dnor { horizon },
        Some(forecaster),
    )
}

/// The temperature field at every simulation step.
pub fn step_fields(trace: &Trace, setup: &SimSetup) -> Result<Vec<TemperatureField>> {
    (0..step_count(trace, setup.step_s))
        .map(|k| {
            let t = trace.start_time() + k as f64 * setup.step_s;
            thermal::field_from_sample(&setup.thermal, &trace.at(t), setup.n_modules)
        })
        .collect()
}

fn step_count(trace: &Trace, dt: f64) -> usize {
    ((trace.end_time() - trace.start_time()) / dt + 1e-9).floor() as usize + 1
}

fn run_inner(
    trace: &Trace,
    setup: &SimSetup,
    scheme: &SchemeSpec,
    custom_forecaster: Option<Box<dyn Forecaster>>,
) -> Result<SimulationReport> {
    setup.validate()?;
    let n = setup.n_modules;
    let plant = setup.plant();
    let r = setup.teg.internal_resistance;
    let dt = setup.step_s;

    let mut held: Option<Configuration> = None;
    let mut predictor: Option<Box<dyn Forecaster>> = None;
    let every = match scheme {
        SchemeSpec::Fixed { config } => {
            if config.n_modules() != n {
                return Err(Error::domain(format!(
                    "fixed configuration covers {} modules, array has {n}",
                    config.n_modules()
                )));
            }
            held = Some(config.clone());
            usize::MAX
        }
        SchemeSpec::InorPeriodic { period_s, .. } => {
            if !(*period_s > 0.0) {
                return Err(Error::config("schemes.inor_period_s", "must be > 0"));
            }
            cadence(*period_s, dt)
        }
        SchemeSpec::Dnor { horizon } => {
            if *horizon == 0 {
                return Err(Error::config("predictor.horizon", "must be >= 1"));
            }
            let cfg = PredictorConfig {
                horizon: *horizon,
                ..setup.predictor.clone()
            };
            predictor = Some(match custom_forecaster {
                Some(f) => f,
                None => Box::new(MlrPredictor::new(cfg)?),
            });
            horizon + 1
        }
    };

    let n_steps = step_count(trace, dt);
    let mut report = SimulationReport {
        scheme: scheme.name().to_string(),
        records: Vec::with_capacity(n_steps),
        decisions: Vec::new(),
        gross_energy: 0.0,
        switch_overhead: 0.0,
        switch_count: 0,
        invocations: 0,
        step_s: dt,
        runtime_total_s: 0.0,
    };
    let mut prev_battery: Option<f64> = None;

    for k in 0..n_steps {
        let t = trace.start_time() + k as f64 * dt;
        let field = thermal::field_from_sample(&setup.thermal, &trace.at(t), n)?;
        let emfs = plant.emfs(&field);
        if let Some(p) = predictor.as_mut() {
            p.observe(&field)?;
        }

        // (new configuration, flips) when the controller decides to switch
        let mut switch_to: Option<(Configuration, usize)> = None;
        // a periodic cycle that keeps its configuration but still pays delays
        let mut idle_cycle = false;
        let mut elapsed = 0.0;
        if k % every == 0 {
            report.invocations += 1;
            match scheme {
                SchemeSpec::Fixed { .. } => {}
                SchemeSpec::InorPeriodic { charge, .. } => {
                    let started = Instant::now();
                    let candidate = reconfig::inor(&field, &plant, &setup.reconfig)?;
                    elapsed = started.elapsed().as_secs_f64();
                    match &held {
                        None => switch_to = Some((candidate, reconfig::bootstrap_flips(n))),
                        Some(old) if *old != candidate => {
                            let flips = array::switch_flip_count(old, &candidate)?;
                            switch_to = Some((candidate, flips));
                        }
                        Some(_) => idle_cycle = *charge == PeriodicCharge::EveryPeriod,
                    }
                }
                SchemeSpec::Dnor { horizon } => {
                    let forecaster = predictor.as_deref().expect("dnor has a predictor");
                    let inputs = DnorInputs {
                        now: t,
                        field: &field,
                        old: held.as_ref(),
                        forecaster,
                        horizon: *horizon,
                        step: dt,
                    };
                    let started = Instant::now();
                    let decision =
                        reconfig::dnor_step(&inputs, &setup.overhead, &plant, &setup.reconfig)?;
                    elapsed = started.elapsed().as_secs_f64();
                    report.decisions.push(DecisionRecord {
                        time: t,
                        old: held.as_ref().map(|c| c.to_string()),
                        candidate: decision.candidate.to_string(),
                        e_old: decision.e_old,
                        e_new: decision.e_new,
                        e_overhead: decision.e_overhead,
                        switched: decision.switched,
                    });
                    if decision.switched {
                        switch_to = Some((decision.chosen, decision.flips));
                    }
                }
            }
            report.runtime_total_s += elapsed;
        }

        let model = if setup.overhead.measure_compute {
            OverheadParams {
                compute_delay: elapsed,
                ..setup.overhead
            }
        } else {
            setup.overhead
        };
        let mut overhead = 0.0;
        let switched = switch_to.is_some();
        if let Some((config, flips)) = switch_to {
            let reference = prev_battery.unwrap_or_else(|| plant.score(&config, &emfs));
            overhead = model.switch_energy(flips, reference);
            report.switch_count += 1;
            held = Some(config);
        } else if idle_cycle {
            overhead = model.switch_energy(0, prev_battery.unwrap_or(0.0));
        }
        report.switch_overhead += overhead;

        let config = held
            .as_ref()
            .expect("a configuration is held after the first step");
        let point = match setup.mppt {
            MpptMode::Analytic => array::mpp_unchecked(config, &emfs, r),
            MpptMode::PerturbObserve { step, max_iters } => {
                array::numeric_mppt(config, &emfs, r, step, max_iters)?.point
            }
        };
        let battery = charger::battery_power(&setup.charger, &point);
        let ideal = ideal_power(&field, &setup.teg, &setup.charger);
        report.gross_energy += battery * dt;
        report.records.push(StepRecord {
            time: t,
            array_power: point.total_power,
            battery_power: battery,
            voltage: point.total_voltage,
            current: point.current,
            boundaries: config.to_string(),
            switched,
            overhead,
            ideal_power: ideal,
            ratio_ideal: if ideal > 0.0 { battery / ideal } else { 0.0 },
        });
        prev_battery = Some(battery);
    }
    Ok(report)
}

/// Runs every scheme over the same trace.
pub fn compare(
    trace: &Trace,
    setup: &SimSetup,
    schemes: &[SchemeSpec],
) -> Result<Vec<SimulationReport>> {
    if schemes.is_empty() {
        return Err(Error::config("schemes", "at least one scheme is required"));
    }
    schemes.iter().map(|s| run(trace, setup, s)).collect()
}

pub const RECORDS_HEADER: &str =
    "time_s,array_power_W,battery_power_W,voltage_V,current_A,boundaries,switched,ratio_ideal";

pub fn write_records_csv<W: Write>(report: &SimulationReport, writer: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RECORDS_HEADER.split(','))?;
    for r in &report.records {
        w.write_record([
            format!("{}", r.time),
            format!("{:.6}", r.array_power),
            format!("{:.6}", r.battery_power),
            format!("{:.6}", r.voltage),
            format!("{:.6}", r.current),
            r.boundaries.clone(),
            u8::from(r.switched).to_string(),
            format!("{:.6}", r.ratio_ideal),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_decisions_csv<W: Write>(
    report: &SimulationReport,
    writer: W,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "time_s",
        "old",
        "candidate",
        "e_old_J",
        "e_new_J",
        "e_overhead_J",
        "switched",
    ])?;
    for d in &report.decisions {
        w.write_record([
            format!("{}", d.time),
            d.old.clone().unwrap_or_default(),
            d.candidate.clone(),
            format!("{:.6}", d.e_old),
            format!("{:.6}", d.e_new),
            format!("{:.6}", d.e_overhead),
            u8::from(d.switched).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `key=value` summary. Timing keys are prefixed `timing.` so they can be
/// dropped when comparing runs.
pub fn summary_kv(report: &SimulationReport) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "scheme={}", report.scheme);
    let _ = writeln!(s, "steps={}", report.records.len());
    let _ = writeln!(s, "energy_output_net_J={:.4}", report.energy_output());
    let _ = writeln!(s, "energy_output_gross_J={:.4}", report.gross_energy);
    let _ = writeln!(s, "switch_overhead_J={:.4}", report.switch_overhead);
    let _ = writeln!(s, "switch_count={}", report.switch_count);
    let _ = writeln!(s, "invocations={}", report.invocations);
    let _ = writeln!(s, "ideal_energy_J={:.4}", report.ideal_energy());
    let _ = writeln!(
        s,
        "timing.average_runtime_ms={:.6}",
        report.average_runtime_ms()
    );
    s
}

type Cell = Box<dyn Fn(&SimulationReport) -> String>;

/// Aligned text table with one column per scheme.
pub fn comparison_table(reports: &[SimulationReport]) -> String {
    let rows: [(&str, Cell); 6] = [
        (
            "Energy Output, net (J)",
            Box::new(|r| format!("{:.1}", r.energy_output())),
        ),
        (
            "Energy Output, gross (J)",
            Box::new(|r| format!("{:.1}", r.gross_energy)),
        ),
        (
            "Switch Overhead (J)",
            Box::new(|r| format!("{:.1}", r.switch_overhead)),
        ),
        ("Switch Count", Box::new(|r| r.switch_count.to_string())),
        ("Invocations", Box::new(|r| r.invocations.to_string())),
        (
            "Average Runtime (ms) [timing]",
            Box::new(|r| format!("{:.3}", r.average_runtime_ms())),
        ),
    ];
    let label_w = rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
    let mut out = String::new();
    let _ = write!(out, "{:label_w$}", "");
    for r in reports {
        let _ = write!(out, " | {:>12}", r.scheme.to_uppercase());
    }
    out.push('\n');
    for (label, cell) in &rows {
        let _ = write!(out, "{label:label_w$}");
        for r in reports {
            let _ = write!(out, " | {:>12}", cell(r));
        }
        out.push('\n');
    }
    out
}

/// Random temperature field ordered hottest-first: coolant 70-100 degC,
/// air 15-35 degC, module temperatures drawn uniformly between them.
pub fn random_field(rng: &mut impl Rng, n_modules: usize) -> TemperatureField {
    let inlet = rng.random_range(70.0..100.0);
    let ambient = rng.random_range(15.0..35.0);
    let mut temps: Vec<f64> = (0..n_modules)
        .map(|_| rng.random_range(ambient..=inlet))
        .collect();
    temps.sort_by(|a, b| b.total_cmp(a));
    TemperatureField {
        time: 0.0,
        hot_side_temps: temps,
        ambient_temp: ambient,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Inor,
    BruteForce,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingRow {
    pub n_modules: usize,
    pub median_s: f64,
    pub calls: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingReport {
    pub rows: Vec<ScalingRow>,
    /// Least-squares fit `median_s = intercept + slope * N`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Growth factor per doubling of N implied by the log-log slope between
    /// the measured sizes; 2.0 for exact linear scaling.
    pub doubling_ratio: f64,
}

impl ScalingReport {
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:>10} | {:>14} | {:>8}", "N", "median (us)", "ratio");
        for (i, row) in self.rows.iter().enumerate() {
            let ratio = if i == 0 {
                "-".to_string()
            } else {
                format!("{:.3}", row.median_s / self.rows[i - 1].median_s)
            };
            let _ = writeln!(
                s,
                "{:>10} | {:>14.3} | {:>8}",
                row.n_modules,
                row.median_s * 1e6,
                ratio
            );
        }
        let _ = writeln!(s, "slope = {:.6e} s/module", self.slope);
        let _ = writeln!(s, "R^2 = {:.4}", self.r_squared);
        let _ = writeln!(s, "doubling ratio = {:.4}", self.doubling_ratio);
        s
    }
}

/// Median wall time of `algorithm` over `calls` invocations per array size.
/// For INOR the group-count band is `params` clamped to each size.
pub fn measure_runtime(
    algorithm: Algorithm,
    sizes: &[usize],
    calls: usize,
    plant: &Plant<'_>,
    params: &ReconfigParams,
    seed: u64,
) -> Result<ScalingReport> {
    if sizes.len() < 2 {
        return Err(Error::config(
            "scaling.sizes",
            "at least two sizes are required",
        ));
    }
    if calls == 0 {
        return Err(Error::config("scaling.calls", "must be >= 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(sizes.len());
    for &n in sizes {
        if n == 0 {
            return Err(Error::config("scaling.sizes", "sizes must be >= 1"));
        }
        let field = random_field(&mut rng, n);
        let band = match algorithm {
            Algorithm::Inor => ReconfigParams {
                n_min: params.n_min.min(n),
                n_max: params.n_max.min(n),
                ..*params
            },
            Algorithm::BruteForce => ReconfigParams {
                n_min: 1,
                n_max: n,
                ..*params
            },
        };
        let mut times = Vec::with_capacity(calls);
        for _ in 0..calls {
            let started = Instant::now();
            let config = match algorithm {
                Algorithm::Inor => reconfig::inor(&field, plant, &band)?,
                Algorithm::BruteForce => reconfig::brute_force_best(&field, plant, &band)?,
            };
            times.push(started.elapsed().as_secs_f64());
            std::hint::black_box(config);
        }
        times.sort_by(f64::total_cmp);
        rows.push(ScalingRow {
            n_modules: n,
            median_s: times[times.len() / 2],
            calls,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.n_modules as f64).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.median_s).collect();
    let (intercept, slope, r_squared) = linear_fit(&xs, &ys);
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.max(1e-12).ln()).collect();
    let (_, log_slope, _) = linear_fit(&lx, &ly);
    Ok(ScalingReport {
        rows,
        slope,
        intercept,
        r_squared,
        doubling_ratio: 2f64.powf(log_slope),
    })
}

/// Ordinary least squares `y = a + b x`; returns `(a, b, R^2)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let b = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let a = my - b * mx;
    let r2 = if syy > 0.0 {
        (sxy * sxy) / (sxx * syy)
    } else {
        1.0
    };
    (a, b, r2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::thermal::{SynthKind, SynthSpec};
    use approx::assert_relative_eq;

    fn constant_trace(inlet: f64, secs: usize) -> Trace {
        thermal::synth_trace(&SynthSpec {
            kind: SynthKind::Constant,
            duration_s: secs,
            inlet_c: inlet,
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn overhead_energy_formula() {
        let o = OverheadParams::default();
        assert_relative_eq!(
            o.switch_energy(6, 50.0),
            0.027 * 50.0 + 0.006,
            max_relative = 1e-12
        );
        assert_eq!(OverheadParams::zero().switch_energy(100, 50.0), 0.0);
        let bad = OverheadParams {
            reconfig_delay: -1.0,
            ..o
        };
        assert!(bad.validate("overhead").is_err());
    }

    #[test]
    fn linear_fit_exact_line() {
        let (a, b, r2) = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert_relative_eq!(a, 1.0, max_relative = 1e-12);
        assert_relative_eq!(b, 2.0, max_relative = 1e-12);
        assert_relative_eq!(r2, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn constant_trace_dnor_switches_once() {
        let setup = SimSetup::with_defaults(100, 85.0, 25.0).unwrap();
        let report = run(
            &constant_trace(85.0, 60),
            &setup,
            &SchemeSpec::Dnor { horizon: 2 },
        )
        .unwrap();
        assert_eq!(report.switch_count, 1);
        assert!(report.records[0].switched);
        assert_eq!(report.records.len(), 61);
        assert_eq!(report.invocations, 21);
    }

    #[test]
    fn fixed_scheme_never_switches() {
        let setup = SimSetup::with_defaults(100, 85.0, 25.0).unwrap();
        let report = run(
            &constant_trace(85.0, 10),
            &setup,
            &SchemeSpec::baseline(100).unwrap(),
        )
        .unwrap();
        assert_eq!(report.switch_count, 0);
        assert_eq!(report.switch_overhead, 0.0);
        assert_eq!(report.records[0].boundaries, "1,11,21,31,41,51,61,71,81,91");
    }

    #[test]
    fn size_mismatch_is_rejected() {
        let setup = SimSetup::with_defaults(100, 85.0, 25.0).unwrap();
        let scheme = SchemeSpec::Fixed {
            config: Configuration::uniform(50, 5).unwrap(),
        };
        assert!(run(&constant_trace(85.0, 5), &setup, &scheme).is_err());
    }

    #[test]
    fn accounting_closes() {
        let setup = SimSetup::with_defaults(60, 85.0, 25.0).unwrap();
        let trace = thermal::synth_trace(&SynthSpec {
            duration_s: 120,
            ..Default::default()
        })
        .unwrap();
        for scheme in [
            SchemeSpec::Dnor { horizon: 2 },
            SchemeSpec::InorPeriodic {
                period_s: 1.0,
                charge: PeriodicCharge::EveryPeriod,
            },
        ] {
            let r = run(&trace, &setup, &scheme).unwrap();
            let gross: f64 = r.records.iter().map(|x| x.battery_power * r.step_s).sum();
            let overhead: f64 = r.records.iter().map(|x| x.overhead).sum();
            assert_eq!(r.gross_energy, gross);
            assert_eq!(r.switch_overhead, overhead);
            assert_eq!(r.energy_output(), gross - overhead);
            assert!(r.records.iter().all(|x| x.ratio_ideal <= 1.0));
        }
    }

    #[test]
    fn perturb_observe_mode_tracks_analytic() {
        let mut setup = SimSetup::with_defaults(40, 85.0, 25.0).unwrap();
        let trace = constant_trace(85.0, 5);
        let exact = run(
            &trace,
            &setup,
            &SchemeSpec::InorPeriodic {
                period_s: 1.0,
                charge: PeriodicCharge::EveryPeriod,
            },
        )
        .unwrap();
        setup.mppt = MpptMode::PerturbObserve {
            step: 0.001,
            max_iters: 1_000_000,
        };
        let po = run(
            &trace,
            &setup,
            &SchemeSpec::InorPeriodic {
                period_s: 1.0,
                charge: PeriodicCharge::EveryPeriod,
            },
        )
        .unwrap();
        assert_relative_eq!(exact.gross_energy, po.gross_energy, max_relative = 1e-4);
    }

    #[test]
    fn table_and_kv_mention_every_scheme() {
        let setup = SimSetup::with_defaults(40, 85.0, 25.0).unwrap();
        let trace = constant_trace(85.0, 10);
        let schemes = [
            SchemeSpec::Dnor { horizon: 2 },
            SchemeSpec::InorPeriodic {
                period_s: 1.0,
                charge: PeriodicCharge::EveryPeriod,
            },
            SchemeSpec::baseline(40).unwrap(),
        ];
        let reports = compare(&trace, &setup, &schemes).unwrap();
        let table = comparison_table(&reports);
        for name in ["DNOR", "INOR", "FIXED", "Switch Overhead (J)"] {
            assert!(table.contains(name));
        }
        let kv = summary_kv(&reports[0]);
        assert!(kv.starts_with("scheme=dnor\n"));
        assert!(kv.lines().last().unwrap().starts_with("timing."));
        assert!(compare(&trace, &setup, &[]).is_err());
    }

    #[test]
    fn runtime_needs_two_sizes() {
        let setup = SimSetup::with_defaults(40, 85.0, 25.0).unwrap();
        let plant = setup.plant();
        assert!(measure_runtime(Algorithm::Inor, &[100], 3, &plant, &setup.reconfig, 1).is_err());
        assert!(measure_runtime(Algorithm::Inor, &[], 3, &plant, &setup.reconfig, 1).is_err());
        let r =
            measure_runtime(Algorithm::Inor, &[50, 100], 5, &plant, &setup.reconfig, 1).unwrap();
        assert_eq!(r.rows.len(), 2);
        assert!(r.table().contains("R^2 = "));
    }
}
